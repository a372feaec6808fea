"""Wire clients for the vision-language requests.

The HTTP client posts an OpenAI-compatible chat-completions document:
{model, messages: [{role, content: [{type: "text", ...}, {type: "image",
media_type, data}, ...]}], max_tokens} and reads the first choice's
message content. A canned-response mock ships for offline use; it records
every request so tests can count retry attempts.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Protocol, Sequence

import requests

from .errors import ConfigurationError, UpstreamError

_MEDIA_TYPES = {
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".webp": "image/webp",
    ".gif": "image/gif",
    ".pgm": "image/x-portable-graymap",
    ".ppm": "image/x-portable-pixmap",
}


@dataclass(frozen=True)
class ImageAttachment:
    media_type: str
    data: str  # base64-encoded bytes


def attach_image(path) -> ImageAttachment:
    """Load an image file as a base64 attachment."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read image {p}: {exc}") from exc
    media = _MEDIA_TYPES.get(p.suffix.lower(), "application/octet-stream")
    return ImageAttachment(media_type=media, data=base64.b64encode(raw).decode("ascii"))


class VlmClient(Protocol):
    def complete(self, kind: str, system: str, user: str, images: Sequence[ImageAttachment]) -> str:
        """Return the model's text answer for one extraction request."""
        ...


class HttpVlmClient:
    """POSTs chat-completions requests to a configurable endpoint."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_tokens: int = 512,
        session: requests.Session | None = None,
    ):
        if not endpoint:
            raise ConfigurationError("HttpVlmClient: endpoint is required")
        if not model:
            raise ConfigurationError("HttpVlmClient: model name is required")
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.max_tokens = max_tokens
        self._session = session or requests.Session()

    def _payload(self, system: str, user: str, images: Sequence[ImageAttachment]) -> dict:
        user_content = [{"type": "text", "text": user}]
        user_content += [
            {"type": "image", "media_type": img.media_type, "data": img.data} for img in images
        ]
        return {
            "model": self.model,
            "messages": [
                {"role": "system", "content": [{"type": "text", "text": system}]},
                {"role": "user", "content": user_content},
            ],
            "max_tokens": self.max_tokens,
        }

    def complete(self, kind: str, system: str, user: str, images: Sequence[ImageAttachment]) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(
                self.endpoint,
                json=self._payload(system, user, images),
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise UpstreamError(f"request to {self.endpoint} failed: {exc}") from exc
        if resp.status_code >= 400:
            raise UpstreamError(f"{self.endpoint} returned HTTP {resp.status_code}: {resp.text[:500]}")
        try:
            doc = resp.json()
            content = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise UpstreamError(f"malformed response from {self.endpoint}: {exc}") from exc
        if isinstance(content, str):
            return content
        # Content may come back as a list of typed parts; keep the text ones.
        return "".join(part.get("text", "") for part in content if isinstance(part, dict))


@dataclass
class MockCall:
    kind: str
    system: str
    user: str
    images: List[ImageAttachment]


class MockVlmClient:
    """Canned responses keyed by request kind, served in order.

    A list entry may be an Exception instance, which is raised instead of
    returned (to script transport failures). The last entry repeats once a
    kind's list is exhausted.
    """

    def __init__(self, responses: Dict[str, List]):
        self.responses = {k: list(v) for k, v in responses.items()}
        self._cursor = {k: 0 for k in responses}
        self.calls: List[MockCall] = []

    @classmethod
    def from_file(cls, path) -> "MockVlmClient":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot load mock responses from {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigurationError(f"mock responses file {path} must map kind -> list of responses")
        return cls({k: list(v) if isinstance(v, list) else [v] for k, v in doc.items()})

    def calls_for(self, kind: str) -> int:
        return sum(1 for c in self.calls if c.kind == kind)

    def complete(self, kind: str, system: str, user: str, images: Sequence[ImageAttachment]) -> str:
        self.calls.append(MockCall(kind=kind, system=system, user=user, images=list(images)))
        if kind not in self.responses or not self.responses[kind]:
            raise ConfigurationError(f"MockVlmClient: no canned responses for kind {kind!r}")
        idx = min(self._cursor[kind], len(self.responses[kind]) - 1)
        self._cursor[kind] += 1
        item = self.responses[kind][idx]
        if isinstance(item, BaseException):
            raise item
        return str(item)
