"""Optional text-generation gateway with a deterministic offline fallback.

The gateway is any HTTPS endpoint accepting ``POST {"prompt": ...}`` and
answering either JSON with a ``text`` field or plain text.  It is configured
through ``GATEWAY_URL`` / ``GATEWAY_KEY``.  Failures never propagate: the
caller gets the template text back with ``generated=False``.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import httpx

from .species import KnowledgeChunk, Recommendation

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0


@dataclass(frozen=True)
class GatewayResult:
    text: str
    generated: bool
    warning: str | None = None


class TextGateway:
    def __init__(self, url: str, key: str | None = None, timeout: float = DEFAULT_TIMEOUT,
                 client: httpx.Client | None = None):
        self.url = url
        self.key = key
        self.timeout = timeout
        self._client = client

    @classmethod
    def from_env(cls, env=None, **kwargs) -> "TextGateway | None":
        env = os.environ if env is None else env
        url = env.get("GATEWAY_URL", "").strip()
        if not url:
            return None
        return cls(url, env.get("GATEWAY_KEY") or None, **kwargs)

    def generate(self, prompt: str) -> str:
        headers = {"Authorization": f"Bearer {self.key}"} if self.key else {}
        client = self._client or httpx.Client(timeout=self.timeout)
        try:
            resp = client.post(self.url, json={"prompt": prompt}, headers=headers,
                               timeout=self.timeout)
            resp.raise_for_status()
        finally:
            if self._client is None:
                client.close()
        if resp.headers.get("content-type", "").startswith("application/json"):
            payload = resp.json()
            text = payload.get("text") if isinstance(payload, dict) else None
            if not isinstance(text, str):
                raise ValueError("gateway JSON response has no 'text' field")
            return text
        return resp.text


def build_prompt(recommendation: Recommendation, chunk: KnowledgeChunk) -> str:
    species = ", ".join(recommendation.species_names)
    return (
        "Using only the reference text below, explain why these tree species suit a site "
        f"with {recommendation.key.humidity_mm:g} mm annual precipitation and "
        f"{recommendation.key.soil_type} soil: {species}.\n\n"
        f"Reference text:\n{chunk.body}\n"
    )


def generate_via_gateway(
    recommendation: Recommendation,
    chunk: KnowledgeChunk,
    gateway: TextGateway | None = None,
) -> GatewayResult:
    if gateway is None:
        return GatewayResult(recommendation.rendered_text, generated=False)
    try:
        text = gateway.generate(build_prompt(recommendation, chunk))
    except (httpx.HTTPError, ValueError) as exc:
        warning = f"gateway failed, using template: {exc}"
        log.warning(warning)
        return GatewayResult(recommendation.rendered_text, generated=False, warning=warning)
    return GatewayResult(text, generated=True)
