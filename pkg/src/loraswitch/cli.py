"""Command-line surface: profile, schedule, generate, ablate, refine-prompt,
analyze-weights.

Every command is deterministic given its config; profile and refined-prompt
results are cached per pair so reruns skip recomputation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import alignment, pnm, profiling, scheduling, toy, trace, vlm, weights
from .config import RunConfig, load_config
from .errors import ConfigurationError, LoraSwitchError, exit_code_for
from .profiling import ImportanceProfile
from .scheduling import SwitchSchedule
from .signal import content_fidelity, style_fidelity
from .toy import DenoiserSpec, ToySetup


def _say(msg: str) -> None:
    print(msg)


def _warn(msg: str) -> None:
    print(msg, file=sys.stderr)


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _toy_setup(cfg: RunConfig) -> ToySetup:
    t = cfg.toy
    return toy.default_setup(
        total_steps=t.total_steps,
        height=t.height,
        width=t.width,
        channels=t.channels,
        gain=t.gain,
        content_seed=t.content_seed,
        style_seed=t.style_seed,
    )


def _profile_path(out_dir: Path, cfg: RunConfig, role: str, seed: int) -> Path:
    name = f"{cfg.pair_id}.{cfg.metric}.n{seed}.{role}.json"
    return _ensure_dir(out_dir / "profiles") / name


def _cached_profile(path: Path, role: str, cfg: RunConfig, seed: int, source: str) -> Optional[ImportanceProfile]:
    if not path.exists():
        return None
    try:
        profile = ImportanceProfile.from_json(path.read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError, LoraSwitchError) as exc:
        _warn(f"profile cache {path} unreadable ({exc}); recomputing")
        return None
    expected = dict(adapter_id=role, metric=cfg.metric, seed=seed, source=source)
    actual = dict(adapter_id=profile.adapter_id, metric=profile.metric, seed=profile.seed, source=profile.source)
    if actual != expected:
        _warn(f"profile cache {path} does not match the requested run; recomputing")
        return None
    return profile


def compute_profiles(cfg: RunConfig, out_dir: Path) -> Tuple[ImportanceProfile, ImportanceProfile]:
    """Content and style profiles for the configured pair, cached by
    (pair id, metric, seed)."""
    if cfg.backend == "trace":
        recorded = trace.read_trace(cfg.trace_path)
        seed = recorded.seed
        source = "trace"
    else:
        setup = _toy_setup(cfg)
        seed = cfg.toy.noise_seed
        source = "toy"

    profiles = {}
    for role in ("content", "style"):
        path = _profile_path(out_dir, cfg, role, seed)
        cached = _cached_profile(path, role, cfg, seed, source)
        if cached is not None:
            _say(f"profile cache hit: {path}")
            profiles[role] = cached
            continue
        if cfg.backend == "trace":
            profile = trace.profile_from_trace(recorded, role, cfg.metric)
        else:
            adapter = setup.content if role == "content" else setup.style
            profile = profiling.profile_adapter(
                toy.as_denoiser(setup.base),
                toy.as_denoiser(adapter),
                setup.total_steps,
                seed,
                cfg.metric,
                height=setup.height,
                width=setup.width,
                channels=setup.channels,
                adapter_id=role,
            )
        path.write_text(profile.to_json(), encoding="utf-8")
        _say(f"profile written: {path}")
        # The serialized form (9 significant digits) is canonical, so fresh
        # and cache-loaded profiles drive schedules identically.
        profiles[role] = ImportanceProfile.from_json(path.read_text(encoding="utf-8"))
    return profiles["content"], profiles["style"]


def build_run_schedule(cfg: RunConfig, out_dir: Path) -> SwitchSchedule:
    if cfg.mode == "dynamic":
        profile_c, profile_s = compute_profiles(cfg, out_dir)
        return scheduling.build_schedule(cfg.mode, cfg.schedule_seed, profile_c, profile_s)
    total = cfg.toy.total_steps
    if cfg.backend == "trace":
        total = trace.read_trace(cfg.trace_path).total_steps
    return scheduling.build_schedule(cfg.mode, cfg.schedule_seed, total_steps=total)


def schedule_policy(schedule: SwitchSchedule, setup: ToySetup):
    """Per-step spec selector honoring the schedule's choices."""
    merged = toy.merge_spec(setup.content, setup.style)
    table = {scheduling.CONTENT: setup.content, scheduling.STYLE: setup.style, scheduling.MERGE: merged}

    def policy(t: int) -> DenoiserSpec:
        return table[schedule.choice(t)]

    return policy


def generate_with_schedule(cfg: RunConfig, schedule: SwitchSchedule) -> Tuple[np.ndarray, Dict[str, float]]:
    setup = _toy_setup(cfg)
    traj = toy.run_trajectory(
        schedule_policy(schedule, setup),
        cfg.toy.noise_seed,
        setup.total_steps,
        setup.height,
        setup.width,
        setup.channels,
    )
    cutoff = cfg.toy.metrics_cutoff
    metrics = {
        "content_fidelity": content_fidelity(traj.final, setup.content.target, cutoff),
        "style_fidelity": style_fidelity(traj.final, setup.style.target, cutoff),
    }
    return traj.final, metrics


def cmd_profile(cfg: RunConfig) -> int:
    out_dir = _ensure_dir(Path(cfg.out_dir))
    compute_profiles(cfg, out_dir)
    return 0


def cmd_schedule(cfg: RunConfig) -> int:
    out_dir = _ensure_dir(Path(cfg.out_dir))
    schedule = build_run_schedule(cfg, out_dir)
    path = _ensure_dir(out_dir / "schedules") / f"{cfg.pair_id}.{cfg.mode}.{cfg.metric}.s{cfg.schedule_seed}.json"
    path.write_text(schedule.to_json(), encoding="utf-8")
    _say(f"schedule written: {path}")
    return 0


def cmd_generate(cfg: RunConfig) -> int:
    out_dir = _ensure_dir(Path(cfg.out_dir))
    schedule = build_run_schedule(cfg, out_dir)
    stem = f"{cfg.pair_id}.{cfg.mode}.{cfg.metric}.s{cfg.schedule_seed}"
    schedule_path = _ensure_dir(out_dir / "schedules") / f"{stem}.json"
    schedule_path.write_text(schedule.to_json(), encoding="utf-8")
    _say(f"schedule written: {schedule_path}")
    if cfg.backend == "trace":
        _say("trace backend has no generator; schedule written, skipping image and metrics")
        return 0
    final, metrics = generate_with_schedule(cfg, schedule)
    image_path = pnm.write_pnm(final, str(_ensure_dir(out_dir / "images") / stem))
    metrics_path = _ensure_dir(out_dir / "metrics") / f"{stem}.json"
    _write_json(metrics_path, metrics)
    _say(f"image written: {image_path}")
    _say(f"metrics written: {metrics_path} {json.dumps(metrics)}")
    return 0


def run_removal_experiment(
    setup: ToySetup,
    adapter_role: str,
    removed_steps: List[int],
    noise_seed: int,
    cutoff: float,
) -> Dict[str, float]:
    """Single-adapter run with the selected steps replaced by the base model."""
    adapter = setup.content if adapter_role == "content" else setup.style
    removed = set(removed_steps)

    def policy(t: int) -> DenoiserSpec:
        return setup.base if t in removed else adapter

    traj = toy.run_trajectory(policy, noise_seed, setup.total_steps, setup.height, setup.width, setup.channels)
    return {
        "content_fidelity": content_fidelity(traj.final, setup.content.target, cutoff),
        "style_fidelity": style_fidelity(traj.final, setup.style.target, cutoff),
    }


def _toy_profiles_for_seed(cfg: RunConfig, setup: ToySetup, noise_seed: int, metric: str) -> Dict[str, ImportanceProfile]:
    return {
        role: profiling.profile_adapter(
            toy.as_denoiser(setup.base),
            toy.as_denoiser(setup.content if role == "content" else setup.style),
            setup.total_steps,
            noise_seed,
            metric,
            height=setup.height,
            width=setup.width,
            channels=setup.channels,
            adapter_id=role,
        )
        for role in ("content", "style")
    }


def cmd_ablate(cfg: RunConfig) -> int:
    if cfg.backend != "toy":
        raise ConfigurationError("ablate: only the toy backend can rerun trajectories")
    out_dir = _ensure_dir(Path(cfg.out_dir))
    setup = _toy_setup(cfg)
    ab = cfg.ablate
    ks = ab.ks or [setup.total_steps // 5]
    cutoff = cfg.toy.metrics_cutoff
    fidelity_key = {"content": "content_fidelity", "style": "style_fidelity"}

    removal_jobs = []
    for noise_seed in ab.noise_seeds:
        profiles = _toy_profiles_for_seed(cfg, setup, noise_seed, cfg.metric)
        baselines = {
            role: run_removal_experiment(setup, role, [], noise_seed, cutoff) for role in ("content", "style")
        }
        for role in ("content", "style"):
            for policy in ab.policies:
                for k in ks:
                    removal_jobs.append((noise_seed, profiles[role], baselines[role], role, policy, k))

    def removal_task(job):
        noise_seed, profile, baseline, role, policy, k = job
        steps = scheduling.ablate_steps(profile, k, policy, seed=noise_seed)
        result = run_removal_experiment(setup, role, steps, noise_seed, cutoff)
        key = fidelity_key[role]
        return {
            "adapter": role,
            "policy": policy,
            "k": k,
            "noise_seed": noise_seed,
            "removed_steps": steps,
            "baseline": baseline,
            "ablated": result,
            "degradation": baseline[key] - result[key],
        }

    mode_jobs = [
        (metric, mode, seed)
        for metric in ab.metrics
        for mode in ab.modes
        for seed in range(ab.schedule_seeds)
    ]

    # Profiles are shared across jobs; compute them before fanning out so
    # the cache writes stay single-threaded.
    profile_pairs = {}
    for metric in ab.metrics:
        if "dynamic" in ab.modes:
            sub = RunConfig(**{**cfg.__dict__, "metric": metric})
            profile_pairs[metric] = compute_profiles(sub, out_dir)

    def mode_task(job):
        metric, mode, seed = job
        sub = RunConfig(**{**cfg.__dict__, "metric": metric, "mode": mode, "schedule_seed": seed})
        if mode == "dynamic":
            profile_c, profile_s = profile_pairs[metric]
            schedule = scheduling.build_schedule(mode, seed, profile_c, profile_s)
        else:
            schedule = scheduling.build_schedule(mode, seed, total_steps=setup.total_steps)
        _, metrics = generate_with_schedule(sub, schedule)
        return {"metric": metric, "mode": mode, "schedule_seed": seed, **metrics}

    with ThreadPoolExecutor(max_workers=max(1, ab.workers)) as pool:
        removal = list(pool.map(removal_task, removal_jobs))
        mode_sweep = list(pool.map(mode_task, mode_jobs))

    removal.sort(key=lambda r: (r["adapter"], r["policy"], r["k"], r["noise_seed"]))
    mode_sweep.sort(key=lambda r: (r["metric"], r["mode"], r["schedule_seed"]))
    report = {
        "version": 1,
        "pair_id": cfg.pair_id,
        "metric": cfg.metric,
        "ks": ks,
        "policies": ab.policies,
        "noise_seeds": ab.noise_seeds,
        "removal": removal,
        "mode_sweep": mode_sweep,
    }
    path = _ensure_dir(out_dir / "reports") / f"ablate.{cfg.pair_id}.json"
    _write_json(path, report)
    _say(f"ablation report written: {path}")
    return 0


def _make_client(cfg: RunConfig) -> vlm.VlmClient:
    al = cfg.alignment
    if al.client == "mock":
        if not al.mock_responses:
            raise ConfigurationError("alignment.mock_responses: required for the mock client")
        return vlm.MockVlmClient.from_file(al.mock_responses)
    if al.client == "http":
        if not al.endpoint:
            raise ConfigurationError("alignment.endpoint: required for the http client")
        if not al.model:
            raise ConfigurationError("alignment.model: required for the http client")
        return vlm.HttpVlmClient(
            endpoint=al.endpoint,
            model=al.model,
            api_key=os.environ.get(al.api_key_env),
            max_tokens=al.max_tokens,
        )
    raise ConfigurationError(f"alignment.client: must be 'mock' or 'http', got {al.client!r}")


def cmd_refine_prompt(cfg: RunConfig) -> int:
    al = cfg.alignment
    out_dir = _ensure_dir(Path(cfg.out_dir))
    cache = _ensure_dir(out_dir / "refined") / f"{cfg.pair_id}.json"
    if cache.exists():
        try:
            doc = json.loads(cache.read_text(encoding="utf-8"))
            _say(f"refined prompt cache hit: {cache}")
            _say(doc["composed"])
            return 0
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            _warn(f"refined prompt cache {cache} unreadable ({exc}); recomputing")
    if not al.class_name or not al.style_name:
        raise ConfigurationError("alignment.class_name and alignment.style_name are required")
    if not al.content_images or not al.style_image:
        raise ConfigurationError("alignment.content_images and alignment.style_image are required")
    client = _make_client(cfg)
    refined = alignment.refine(
        client,
        [vlm.attach_image(p) for p in al.content_images],
        vlm.attach_image(al.style_image),
        al.class_name,
        al.style_name,
        concept_token_limit=al.concept_token_limit,
        style_token_limit=al.style_token_limit,
        content_trigger=al.content_trigger,
        style_trigger=al.style_trigger,
        retries=al.retries,
    )
    _write_json(
        cache,
        {
            "content_text": refined.content.text,
            "style_text": refined.style.text,
            "composed": refined.composed,
        },
    )
    _say(f"refined prompt written: {cache}")
    _say(refined.composed)
    return 0


def cmd_analyze_weights(cfg: RunConfig, paths: List[str]) -> int:
    if not paths:
        raise ConfigurationError("analyze-weights: at least one weight file is required")
    out_dir = _ensure_dir(Path(cfg.out_dir) / "weights")
    stats = [weights.analyze_weights_file(p) for p in paths]
    for s in stats:
        report = out_dir / (Path(s.path).stem + ".stats.json")
        _write_json(report, s.to_doc())
    _say(f"{'file':<40} {'tensors':>8} {'elements':>12} {'mean_abs':>14}")
    for s in stats:
        _say(f"{Path(s.path).name:<40} {len(s.tensors):>8} {s.total_elements:>12} {s.mean_abs:>14.6g}")
    if len(stats) > 1:
        ref = stats[0].mean_abs
        for s in stats[1:]:
            ratio = s.mean_abs / ref if ref else float("inf")
            _say(f"mean_abs ratio {Path(s.path).name} / {Path(stats[0].path).name} = {ratio:.6g}")
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loraswitch", description=__doc__)
    parser.add_argument("--config", help="path to the JSON run configuration")
    parser.add_argument("--seed", type=int, help="override the schedule seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--backend", choices=["toy", "trace"], help="override the backend")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("profile", "schedule", "generate"):
        p = sub.add_parser(name)
        p.add_argument("--mode", choices=list(scheduling.MODES), help="override the schedule mode")
        p.add_argument("--metric", help="override the importance metric")
        p.add_argument("--trace", help="override the trace path")

    p = sub.add_parser("ablate")
    p.add_argument("--metric", help="override the importance metric")
    p.add_argument("--ks", help="comma-separated removal counts")
    p.add_argument("--policies", help="comma-separated removal policies (top,bottom,random)")
    p.add_argument("--noise-seeds", help="comma-separated trajectory seeds")
    p.add_argument("--schedule-seeds", type=int, help="number of schedule seeds to sweep")

    sub.add_parser("refine-prompt")

    p = sub.add_parser("analyze-weights")
    p.add_argument("files", nargs="+", help="safetensors files to compare")
    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> None:
    if args.seed is not None:
        cfg.schedule_seed = args.seed
    if args.out:
        cfg.out_dir = args.out
    if args.backend:
        cfg.backend = args.backend
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    if getattr(args, "metric", None):
        cfg.metric = args.metric
    if getattr(args, "trace", None):
        cfg.trace_path = args.trace
    if getattr(args, "ks", None):
        cfg.ablate.ks = [int(k) for k in args.ks.split(",")]
    if getattr(args, "policies", None):
        cfg.ablate.policies = args.policies.split(",")
    if getattr(args, "noise_seeds", None):
        cfg.ablate.noise_seeds = [int(s) for s in args.noise_seeds.split(",")]
    if getattr(args, "schedule_seeds", None):
        cfg.ablate.schedule_seeds = args.schedule_seeds
    cfg.validate()


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        _apply_overrides(cfg, args)
        if args.command == "profile":
            return cmd_profile(cfg)
        if args.command == "schedule":
            return cmd_schedule(cfg)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "ablate":
            return cmd_ablate(cfg)
        if args.command == "refine-prompt":
            return cmd_refine_prompt(cfg)
        if args.command == "analyze-weights":
            return cmd_analyze_weights(cfg, args.files)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except LoraSwitchError as exc:
        _warn(f"error: {exc}")
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
