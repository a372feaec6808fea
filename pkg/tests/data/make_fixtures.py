"""Regenerate the checked-in binary fixtures. Run from the repo root:

    python3 tests/data/make_fixtures.py
"""

from pathlib import Path

import numpy as np

from loraswitch import toy, trace

HERE = Path(__file__).parent


def golden_trace() -> None:
    spec_c = toy.DenoiserSpec(target=toy.make_content_target(11, 16, 16), band_hi=0.3)
    spec_s = toy.DenoiserSpec(target=toy.make_style_target(22, 16, 16), band_lo=0.35, band_hi=0.9)
    base = toy.DenoiserSpec(target=np.zeros((1, 16, 16)))
    tf = trace.trace_from_toy(
        toy.as_denoiser(base),
        toy.as_denoiser(spec_c),
        toy.as_denoiser(spec_s),
        total_steps=6,
        seed=4242,
        height=16,
        width=16,
        annotations={"source": "toy", "pair": "golden-fixture"},
    )
    trace.write_trace(tf, HERE / "golden.fstr")
    print("wrote", HERE / "golden.fstr")


def template_goldens() -> None:
    from loraswitch import alignment

    pinned = {
        "content_system": ("teapot", 30),
        "content_user": ("teapot", 30),
        "style_system": ("watercolor", 25),
        "style_user": ("watercolor", 25),
    }
    for kind, (name, limit) in pinned.items():
        path = HERE / f"{kind}.golden.txt"
        path.write_text(alignment.render_template(kind, name, limit), encoding="utf-8")
        print("wrote", path)


if __name__ == "__main__":
    golden_trace()
    template_goldens()
