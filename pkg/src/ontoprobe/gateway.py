"""Model access behind a provider abstraction.

Three providers: an OpenAI-compatible chat endpoint, an OpenAI-compatible
text-completion endpoint, and a built-in synthetic memorizer used to
validate the whole pipeline offline. All providers sit behind the same
append-only response cache, keyed by (provider, model, temperature,
prompt text, repetition tag) so that deliberate repeats bypass earlier
answers while everything else is resumable.

The synthetic memorizer answers the gold ID with a per-concept recall
probability that decays linearly with temperature, and otherwise
hallucinates in a configurable style. Its randomness is a pure function
of (seed, prompt text, temperature) at temperature zero, so repeating a
prompt is deterministic, exactly like greedy decoding; above zero the
repetition tag enters the hash and answers vary between repeats.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import string
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path

from .errors import ConfigurationError, ParseError, TransportExhausted
from .ontology import OntologyKind
from .prompts import RenderedPrompt

API_KEY_ENV = "ONTOPROBE_API_KEY"


class Provider(str, Enum):
    CHAT_HTTP = "CHAT_HTTP"
    COMPLETION_HTTP = "COMPLETION_HTTP"
    SYNTHETIC = "SYNTHETIC"


class HallucinationStyle(str, Enum):
    NEAR_MISS = "NEAR_MISS"
    POPULAR_ID = "POPULAR_ID"
    INVENTED = "INVENTED"


class TransportFailure(Exception):
    """A single transport attempt failed; the gateway retries these."""


@dataclass
class ModelConfig:
    provider: Provider
    model_name: str
    temperature: float = 0.0
    max_new_tokens: int = 10
    endpoint: str | None = None
    seed: int = 0
    profile_path: str | None = None
    max_in_flight: int = 4
    requests_per_minute: float | None = None
    max_attempts: int = 5
    backoff_base: float = 0.5

    def __post_init__(self) -> None:
        if isinstance(self.provider, str):
            self.provider = Provider(self.provider.upper())
        if not (0.0 <= self.temperature <= 1.0):
            raise ConfigurationError(f"temperature must be within [0,1], got {self.temperature}")
        if self.max_new_tokens < 1:
            raise ConfigurationError("max_new_tokens must be at least 1")
        if self.provider in (Provider.CHAT_HTTP, Provider.COMPLETION_HTTP) and not self.endpoint:
            raise ConfigurationError(f"{self.provider.value} requires an endpoint")
        if self.max_in_flight < 1:
            raise ConfigurationError("max_in_flight must be at least 1")
        if self.max_attempts < 1:
            raise ConfigurationError("max_attempts must be at least 1")
        if self.requests_per_minute is not None and self.requests_per_minute <= 0:
            raise ConfigurationError("requests_per_minute must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown model config fields: {sorted(unknown)}")
        if "provider" not in data or "model_name" not in data:
            raise ConfigurationError("model config requires provider and model_name")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"invalid model config: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "ModelConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read model config {path}: {exc}") from exc
        except ValueError as exc:
            raise ConfigurationError(f"model config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"model config {path} must be a JSON object")
        config = cls.from_dict(data)
        if config.profile_path is not None and not os.path.isabs(config.profile_path):
            config.profile_path = str((path.parent / config.profile_path).resolve())
        return config

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.value if isinstance(value, Enum) else value
        return out

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ModelResponse:
    request_id: str
    raw_text: str
    latency: float
    from_cache: bool


@dataclass
class SyntheticProfile:
    """Deterministic stand-in model with a planted memorization curve."""

    memorization_curve: dict[str, float]
    hallucination_style: HallucinationStyle = HallucinationStyle.INVENTED
    popularity: dict[str, int] = field(default_factory=dict)
    temperature_sensitivity: float = 0.0
    universe: frozenset[str] | None = None
    _popular_table: tuple[list[str], list[int]] | None = field(
        init=False, repr=False, compare=False, default=None
    )
    _universe_cache: frozenset[str] | None = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        if isinstance(self.hallucination_style, str):
            self.hallucination_style = HallucinationStyle(self.hallucination_style.upper())
        for concept_id, p in self.memorization_curve.items():
            if not (0.0 <= p <= 1.0):
                raise ConfigurationError(f"recall probability for {concept_id} outside [0,1]: {p}")
        for concept_id, c in self.popularity.items():
            if c < 0:
                raise ConfigurationError(f"negative popularity for {concept_id}")
        if self.temperature_sensitivity < 0:
            raise ConfigurationError("temperature_sensitivity must be non-negative")

    def effective_universe(self) -> frozenset[str]:
        if self._universe_cache is None:
            self._universe_cache = self.universe if self.universe is not None else frozenset(self.memorization_curve)
        return self._universe_cache

    def popular_table(self) -> tuple[list[str], list[int]]:
        if self._popular_table is None:
            items = sorted((cid, c) for cid, c in self.popularity.items() if c > 0)
            if not items:
                items = [(cid, 1) for cid in sorted(self.memorization_curve)]
            ids = [cid for cid, _ in items]
            cumulative = []
            running = 0
            for _, c in items:
                running += c
                cumulative.append(running)
            self._popular_table = (ids, cumulative)
        return self._popular_table

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticProfile":
        try:
            concepts = data["concepts"]
            curve = {row["id"]: float(row["recall"]) for row in concepts}
            popularity = {row["id"]: int(row.get("popularity", 0)) for row in concepts}
            universe = frozenset(data["universe"]) if "universe" in data else None
            return cls(
                memorization_curve=curve,
                hallucination_style=HallucinationStyle(data.get("hallucination_style", "INVENTED")),
                popularity=popularity,
                temperature_sensitivity=float(data.get("temperature_sensitivity", 0.0)),
                universe=universe,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"invalid synthetic profile: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "SyntheticProfile":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read synthetic profile {path}: {exc}") from exc
        except ValueError as exc:
            raise ConfigurationError(f"synthetic profile {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        rows = [
            {"id": cid, "recall": self.memorization_curve[cid], "popularity": self.popularity.get(cid, 0)}
            for cid in sorted(self.memorization_curve)
        ]
        out = {
            "hallucination_style": self.hallucination_style.value,
            "temperature_sensitivity": self.temperature_sensitivity,
            "concepts": rows,
        }
        if self.universe is not None:
            out["universe"] = sorted(self.universe)
        return out


def cache_key(provider: Provider, model_name: str, temperature: float, prompt_text: str, repetition_tag: int) -> str:
    material = json.dumps(
        [provider.value, model_name, repr(float(temperature)), prompt_text, int(repetition_tag)],
        ensure_ascii=False,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only newline-delimited JSON store of raw responses.

    A partially written final line (crash mid-append) is ignored on
    load; corruption anywhere else is an error.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path.exists():
            lines = self.path.read_text(encoding="utf-8").splitlines()
            for idx, line in enumerate(lines):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    self._entries[row["key_hash"]] = row["raw_text"]
                except (KeyError, ValueError) as exc:
                    if idx == len(lines) - 1:
                        break
                    raise ParseError(f"response cache {self.path}: line {idx + 1} is corrupt: {exc}") from exc

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key_hash: str) -> str | None:
        with self._lock:
            return self._entries.get(key_hash)

    def put(self, key_hash: str, config_digest: str, prompt_text: str, raw_text: str) -> None:
        with self._lock:
            if key_hash in self._entries:
                return
            self._entries[key_hash] = raw_text
            record = {
                "key_hash": key_hash,
                "config_digest": config_digest,
                "prompt": prompt_text,
                "raw_text": raw_text,
                "timestamp": time.time(),
            }
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _mutate_one_digit(concept_id: str, rng: random.Random) -> str:
    positions = [i for i, ch in enumerate(concept_id) if ch.isdigit()]
    pos = positions[rng.randrange(len(positions))]
    old = concept_id[pos]
    new = rng.choice([d for d in string.digits if d != old])
    return concept_id[:pos] + new + concept_id[pos + 1:]


def _invent_id(kind: OntologyKind, universe: frozenset[str], rng: random.Random) -> str:
    for _ in range(64):
        if kind in (OntologyKind.GO, OntologyKind.UBERON):
            candidate = f"{kind.value}:{rng.randrange(10**7):07d}"
        elif kind is OntologyKind.ICD10:
            candidate = f"{rng.choice(string.ascii_uppercase)}{rng.randrange(100):02d}.{rng.randrange(10)}"
        else:
            candidate = f"Q{rng.randrange(1, 10**9)}"
        if candidate not in universe:
            return candidate
    raise ConfigurationError(f"could not invent an unused {kind.value} ID; universe too dense")


def synthetic_respond(profile: SyntheticProfile, prompt: RenderedPrompt, temperature: float, rng: random.Random) -> str:
    """One synthetic answer: gold with probability p_eff, otherwise a
    hallucination in the profile's style. p_eff = recall * (1 - t*delta)."""
    gold = prompt.concept_id
    recall = profile.memorization_curve.get(gold)
    if recall is None:
        raise ValueError(f"concept {gold} is not in the synthetic profile")
    p_eff = recall * (1.0 - temperature * profile.temperature_sensitivity)
    p_eff = min(max(p_eff, 0.0), 1.0)
    if rng.random() < p_eff:
        return gold

    kind = prompt.template_key[0]
    style = profile.hallucination_style
    if style is HallucinationStyle.NEAR_MISS:
        return _mutate_one_digit(gold, rng)
    if style is HallucinationStyle.POPULAR_ID:
        ids, cumulative = profile.popular_table()
        for _ in range(16):
            pick = rng.choices(ids, cum_weights=cumulative, k=1)[0]
            if pick != gold:
                return pick
        return _mutate_one_digit(gold, rng)
    return _invent_id(kind, profile.effective_universe(), rng)


def _requests_transport(url: str, payload: dict, headers: dict) -> tuple[int, dict | None]:
    import requests

    try:
        response = requests.post(url, json=payload, headers=headers, timeout=120)
    except requests.RequestException as exc:
        raise TransportFailure(str(exc)) from exc
    try:
        body = response.json()
    except ValueError:
        body = None
    return response.status_code, body


class ModelGateway:
    """Dispatches rendered prompts to the configured provider.

    Responses are served from the cache when the same request was made
    before with the same repetition tag. HTTP errors are retried with
    exponential backoff within the attempt budget; after that a request
    surfaces as TransportExhausted, which batch completion records as a
    missing response rather than aborting the run.
    """

    def __init__(
        self,
        config: ModelConfig,
        profile: SyntheticProfile | None = None,
        cache: ResponseCache | None = None,
        transport=None,
        time_fn=time.monotonic,
        sleep_fn=time.sleep,
    ):
        self.config = config
        self.cache = cache
        self._transport = transport or _requests_transport
        self._time_fn = time_fn
        self._sleep_fn = sleep_fn
        self._rate_lock = threading.Lock()
        self._stamps: deque[float] = deque()
        self._config_digest = config.digest()
        if config.provider is Provider.SYNTHETIC:
            if profile is None:
                if config.profile_path is None:
                    raise ConfigurationError("SYNTHETIC provider requires a profile or profile_path")
                profile = SyntheticProfile.from_file(config.profile_path)
        self.profile = profile

    def complete(self, prompt: RenderedPrompt, repetition_tag: int = 0, temperature: float | None = None) -> ModelResponse:
        temp = self.config.temperature if temperature is None else float(temperature)
        if not (0.0 <= temp <= 1.0):
            raise ConfigurationError(f"temperature must be within [0,1], got {temp}")
        key = cache_key(self.config.provider, self.config.model_name, temp, prompt.text, repetition_tag)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return ModelResponse(key, hit, 0.0, True)
        started = self._time_fn()
        if self.config.provider is Provider.SYNTHETIC:
            raw_text = self._dispatch_synthetic(prompt, temp, repetition_tag)
        else:
            raw_text = self._dispatch_http(prompt, temp)
        latency = self._time_fn() - started
        if self.cache is not None:
            self.cache.put(key, self._config_digest, prompt.text, raw_text)
        return ModelResponse(key, raw_text, latency, False)

    def complete_batch(self, items: list[tuple[RenderedPrompt, int, float | None]]) -> list[ModelResponse | None]:
        """Complete many requests with bounded parallelism.

        Returns responses in input order; an entry is None when that
        request exhausted its transport retries. Configuration errors
        abort the whole batch.
        """
        results: list[ModelResponse | None] = [None] * len(items)

        def work(index: int) -> None:
            prompt, tag, temp = items[index]
            try:
                results[index] = self.complete(prompt, tag, temp)
            except TransportExhausted:
                results[index] = None

        if self.config.max_in_flight == 1 or len(items) <= 1:
            for i in range(len(items)):
                work(i)
            return results
        with ThreadPoolExecutor(max_workers=self.config.max_in_flight) as pool:
            futures = [pool.submit(work, i) for i in range(len(items))]
            for future in as_completed(futures):
                future.result()
        return results

    def _dispatch_synthetic(self, prompt: RenderedPrompt, temperature: float, repetition_tag: int) -> str:
        assert self.profile is not None
        material = f"{self.config.seed}|{prompt.text}|{repr(float(temperature))}"
        if temperature > 0.0:
            material += f"|{repetition_tag}"
        digest = hashlib.sha256(material.encode("utf-8")).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        return synthetic_respond(self.profile, prompt, temperature, rng)

    def _dispatch_http(self, prompt: RenderedPrompt, temperature: float) -> str:
        assert self.config.endpoint is not None
        base = self.config.endpoint.rstrip("/")
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        if self.config.provider is Provider.CHAT_HTTP:
            url = f"{base}/chat/completions"
            payload = {
                "model": self.config.model_name,
                "temperature": temperature,
                "messages": [{"role": "user", "content": prompt.text}],
            }
        else:
            url = f"{base}/completions"
            payload = {
                "model": self.config.model_name,
                "temperature": temperature,
                "max_tokens": self.config.max_new_tokens,
                "prompt": prompt.text,
            }

        last_failure = "no attempt made"
        for attempt in range(self.config.max_attempts):
            if attempt > 0:
                self._sleep_fn(self.config.backoff_base * 2 ** (attempt - 1))
            self._throttle()
            try:
                status, body = self._transport(url, payload, headers)
            except TransportFailure as exc:
                last_failure = str(exc)
                continue
            if status in (401, 403):
                raise ConfigurationError(f"authentication failed ({status}); check {API_KEY_ENV}")
            if status == 429 or 500 <= status < 600:
                last_failure = f"HTTP {status}"
                continue
            if status != 200:
                raise ConfigurationError(f"endpoint returned HTTP {status}")
            return self._parse_body(body)
        raise TransportExhausted(
            f"request failed after {self.config.max_attempts} attempts; last failure: {last_failure}"
        )

    def _parse_body(self, body: dict | None) -> str:
        try:
            assert body is not None
            choice = body["choices"][0]
            if self.config.provider is Provider.CHAT_HTTP:
                content = choice["message"]["content"]
            else:
                content = choice["text"]
        except (AssertionError, KeyError, IndexError, TypeError) as exc:
            raise ConfigurationError(f"unexpected response shape from endpoint: {exc!r}") from exc
        return content if isinstance(content, str) else ""

    def _throttle(self) -> None:
        cap = self.config.requests_per_minute
        if cap is None:
            return
        while True:
            with self._rate_lock:
                now = self._time_fn()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < cap:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self._sleep_fn(max(wait, 0.01))
