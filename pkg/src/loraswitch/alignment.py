"""Prompt refinement: extract aligned content and style descriptions.

A vision-language model is shown the reference images together with the
extraction templates below, its answers are validated against the strict
single-line output format, and the two accepted descriptions are composed
(with the adapters' trigger words) into the final generation prompt.
Rejected answers are retried with the validation error explained.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .errors import (
    ConfigurationError,
    DescriptionError,
    DescriptionFeatureError,
    DescriptionFormatError,
    DescriptionLengthError,
    RefinementFailedError,
)
from .vlm import ImageAttachment, VlmClient

CONTENT_SYSTEM_TEMPLATE = """You are a concept extractor specialized in analyzing MULTIPLE images of {class_name}

CORE TASK: Extract ONLY the SHARED core subject content across all concept images (ignore unique details from single images).

MANDATORY INCLUSIONS:
- Shared subject identity (clear category of the main subject, e.g., 'ceramic teapot').
- 3+ shared key features (form, structure, pose, unique traits present in ALL images, e.g., 'domed lid, curved spout').

STRICT EXCLUSIONS:
- NO style elements (color, texture, lighting, brushwork — these belong to style descriptions).
- NO background, environment, props, text, or camera-related details (e.g., 'indoors', 'close-up').
- NO unique details from individual images (e.g., a pattern only in one image).

STRICT TOKEN LIMIT: The output must be ≥{concept_token_limit} tokens.

OUTPUT FORMAT: Single line in the structure:

'[shared subject identity] with [shared feature1], [shared feature2], [shared feature3+]'

Example: 'Ceramic teapot with domed lid, curved spout, C-shaped handle."""

CONTENT_USER_TEMPLATE = """Analyze the provided MULTIPLE Concept Images of '{class_name}'

Follow these steps:

1. Identify the SHARED main subject (present in all images).

2. Extract 3+ key features that appear in ALL images (ignore features unique to single images).

3. Describe them in the required format, excluding all style elements, background, and unique details.

- The output must be STRICTLY ≤{concept_token_limit} tokens.

- Prioritize retaining 3+ key features over redundant words if approaching the limit.

Output ONLY the following line (no extra text):

[shared subject] with [feature1], [feature2], [feature3+]"""

STYLE_SYSTEM_TEMPLATE = """You are a style extractor specialized in analyzing a single {style_name} image.

CORE TASK: Extract ONLY pure visual style elements from the style image (ignore any subject/content details).

MANDATORY INCLUSIONS:
- Artistic medium (clear type of art form, e.g., 'watercolor painting', 'crayon drawing').
- 3+ visual style elements (must be from color palette, lighting, texture/brushwork, mood — e.g., 'soft blue palette, textured brushstrokes').

STRICT EXCLUSIONS:
- NO subject content (objects, structure, form, or any elements related to concept themes).
- NO redundant descriptions unrelated to visual style (e.g., 'popular style', 'modern design').

STRICT TOKEN LIMIT: The output must be ≤{style_token_limit} tokens.

OUTPUT FORMAT: Single line in the structure:

'[artistic medium] with [style element1], [style element2], [style element3+]'

Example: 'Watercolor painting with soft blue palette, textured brushstrokes, warm ambient lighting, dreamy mood'."""

STYLE_USER_TEMPLATE = """Analyze the provided single {style_name} image.

Follow these steps:

1. Identify the artistic medium (e.g., 'oil painting', 'digital illustration').

2. Extract 3+ pure visual style elements (focus on color, lighting, texture, mood — avoid any content).

3. Describe them in the required format, excluding all subject-related and non-style details.

The output must be STRICTLY ≤{style_token_limit} tokens.

Prioritize retaining 3+ key style elements over redundant words if approaching the limit.

Use concrete, art-specific vocabulary (e.g., 'impasto texture', 'muted complementary palette', 'film-grain aesthetic').

Output ONLY the following line (no extra text):

 "[artistic medium] with [style element1], [style element2], [style element3+]\""""

TEMPLATES = {
    "content_system": CONTENT_SYSTEM_TEMPLATE,
    "content_user": CONTENT_USER_TEMPLATE,
    "style_system": STYLE_SYSTEM_TEMPLATE,
    "style_user": STYLE_USER_TEMPLATE,
}

_PLACEHOLDERS = {
    "content_system": ("{class_name}", "{concept_token_limit}"),
    "content_user": ("{class_name}", "{concept_token_limit}"),
    "style_system": ("{style_name}", "{style_token_limit}"),
    "style_user": ("{style_name}", "{style_token_limit}"),
}


def render_template(kind: str, name: str, token_limit: int) -> str:
    """Substitute the name and token limit into one of the four templates."""
    if kind not in TEMPLATES:
        raise ConfigurationError(f"render_template: unknown template kind {kind!r}")
    if not name:
        raise ConfigurationError("render_template: name must be nonempty")
    if token_limit < 5:
        raise ConfigurationError(f"render_template: token limit must be >= 5, got {token_limit}")
    name_ph, limit_ph = _PLACEHOLDERS[kind]
    out = TEMPLATES[kind].replace(name_ph, name).replace(limit_ph, str(token_limit))
    if "{" in out or "}" in out:
        raise ConfigurationError(f"render_template: unsubstituted placeholder left in {kind}")
    return out


@dataclass(frozen=True)
class ValidatedDescription:
    """One accepted single-line description of the '<head> with <features>' shape."""

    kind: str  # "content" or "style"
    text: str
    word_count: int
    features: Tuple[str, ...]


@dataclass(frozen=True)
class RefinedPrompt:
    content: ValidatedDescription
    style: ValidatedDescription
    content_trigger: str
    style_trigger: str
    composed: str


def _normalize_line(raw: str) -> str:
    lines = [line.strip() for line in raw.splitlines() if line.strip()]
    text = lines[-1] if lines else ""
    for _ in range(2):
        if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
            text = text[1:-1].strip()
        if text.endswith("."):
            text = text[:-1].strip()
    return text


def validate_description(text: str, limit: int, kind: str) -> ValidatedDescription:
    """Check the '<head> with <f1>, <f2>, <f3>[, ...]' shape and the word budget.

    Keeps only the last nonempty line and strips surrounding quotes and a
    trailing period before checking.
    """
    line = _normalize_line(text)
    if " with " not in line:
        raise DescriptionFormatError(
            f"{kind} description must be a single line of the form '<subject> with <feature1>, <feature2>, <feature3>', got {line!r}"
        )
    head, _, tail = line.partition(" with ")
    if not head.strip():
        raise DescriptionFormatError(f"{kind} description is missing the part before 'with': {line!r}")
    word_count = len(line.split())
    if word_count > limit:
        raise DescriptionLengthError(f"{kind} description has {word_count} words, limit is {limit}")
    features = tuple(f.strip() for f in tail.split(",") if f.strip())
    if len(features) < 3:
        raise DescriptionFeatureError(f"{kind} description lists {len(features)} features, need at least 3")
    return ValidatedDescription(kind=kind, text=line, word_count=word_count, features=features)


def compose_prompt(
    content: ValidatedDescription,
    style: ValidatedDescription,
    content_trigger: str = "",
    style_trigger: str = "",
) -> RefinedPrompt:
    """Join the two descriptions, content first, each led by its trigger word."""
    content_part = " ".join(p for p in (content_trigger.strip(), content.text) if p)
    style_part = " ".join(p for p in (style_trigger.strip(), style.text) if p)
    return RefinedPrompt(
        content=content,
        style=style,
        content_trigger=content_trigger.strip(),
        style_trigger=style_trigger.strip(),
        composed=f"{content_part}, {style_part}",
    )


def _request_with_retries(
    client: VlmClient,
    kind: str,
    system: str,
    user: str,
    images: Sequence[ImageAttachment],
    limit: int,
    retries: int,
) -> ValidatedDescription:
    user_msg = user
    last_error: DescriptionError | None = None
    last_raw = ""
    for _ in range(retries + 1):
        raw = client.complete(kind=kind, system=system, user=user_msg, images=list(images))
        try:
            return validate_description(raw, limit, kind)
        except DescriptionError as err:
            last_error, last_raw = err, raw
            user_msg = (
                f"{user}\n\nYour previous response was rejected: {err}\n"
                "Answer again with ONLY the required single line."
            )
    raise RefinementFailedError(
        f"{kind} description still invalid after {retries + 1} attempts: {last_error}",
        last_response=last_raw,
    )


def refine(
    client: VlmClient,
    content_images: Sequence[ImageAttachment],
    style_image: ImageAttachment,
    class_name: str,
    style_name: str,
    concept_token_limit: int = 30,
    style_token_limit: int = 25,
    content_trigger: str = "",
    style_trigger: str = "",
    retries: int = 2,
) -> RefinedPrompt:
    """Run both extractions end to end and compose the refined prompt."""
    if not content_images:
        raise ConfigurationError("refine: need at least one content reference image")
    content = _request_with_retries(
        client,
        "content",
        render_template("content_system", class_name, concept_token_limit),
        render_template("content_user", class_name, concept_token_limit),
        content_images,
        concept_token_limit,
        retries,
    )
    style = _request_with_retries(
        client,
        "style",
        render_template("style_system", style_name, style_token_limit),
        render_template("style_user", style_name, style_token_limit),
        [style_image],
        style_token_limit,
        retries,
    )
    return compose_prompt(content, style, content_trigger, style_trigger)
