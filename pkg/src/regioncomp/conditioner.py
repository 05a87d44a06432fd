"""Deterministic token embeddings, positional queries, cross-attention, the
closed-form clean-image prediction, and classifier-free guidance.

Design notes:
- Query vectors depend on pixel position only (content-dependent queries can be
  switched on via `content_queries`); the clean posterior of the toy model is a
  function of position and condition.
- A prompt is encoded phrase-wise. A phrase is [modifiers] color pattern
  [location]; the location token contributes no value row but its key component
  is attached to every row of its phrase, which is what lets positional queries
  separate same-kind tokens of different phrases when hints are on. With hints
  off all logits are equal and the output is the mixture mean: the engineered
  attribute-leakage failure mode.
- Color and pattern rows are attended as separate groups, so a [color, pattern]
  prompt renders the color anchor exactly and the stripe flag exactly.
- Anchor colors sit at 0.5 +/- 0.12 per channel rather than at the unit-cube
  corners so that guided predictions of modified colors stay inside the clamp
  range and modifier effects survive guidance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .scene import COLORS, KIND_OF, LOCATIONS, MODIFIERS, NULL_TOKEN, PATTERNS, VOCABULARY

DEFAULT_DIM = 32
DEFAULT_TAU = 10.0
DEFAULT_EMBED_SEED = 0

ANCHOR_AMPLITUDE = 0.12

CLAMP_LO = -0.25
CLAMP_HI = 1.25

STRIPE_BAND = 4  # stripe flag alternates every 4 pixel rows
STRIPE_DEPTH = 0.5

_CORNERS = {
    "red": (1, 0, 0),
    "green": (0, 1, 0),
    "blue": (0, 0, 1),
    "yellow": (1, 1, 0),
    "cyan": (0, 1, 1),
    "magenta": (1, 0, 1),
    "white": (1, 1, 1),
    "black": (0, 0, 0),
}

ANCHORS = {
    name: tuple(0.5 + ANCHOR_AMPLITUDE * (2 * c - 1) for c in corner)
    for name, corner in _CORNERS.items()
}

_LOCATION_DIRS = {
    "left": (-1.0, 0.0),
    "right": (1.0, 0.0),
    "top": (0.0, -1.0),
    "bottom": (0.0, 1.0),
}

# embedding layout: [0:2] location, [2:5] content, [5:] semantic
_LOC = slice(0, 2)
_CONTENT = slice(2, 5)
_SEM = slice(5, None)


def apply_modifier(name: str, rgb: np.ndarray) -> np.ndarray:
    """Modifier value maps; outputs stay in [0, 1]."""
    c = np.asarray(rgb, dtype=np.float64)
    if name == "light":
        return c + 0.3 * (1.0 - c)
    if name == "dark":
        return 0.5 * c
    if name == "vivid":
        return np.clip(0.5 + 1.5 * (c - 0.5), 0.0, 1.0)
    raise ValueError(f"unknown modifier {name!r}")


@dataclass(frozen=True)
class Row:
    kind: str  # color | pattern | null
    token: str
    key: np.ndarray  # (d,) float64
    value: np.ndarray  # (4,) float64: r, g, b, stripe_flag


@dataclass(frozen=True)
class PromptEncoding:
    tokens: tuple
    rows: tuple  # of Row
    modifier_record: tuple  # (modifier, color_token) pairs, in application order
    dim: int
    tau: float

    def group(self, kinds):
        rows = [r for r in self.rows if r.kind in kinds]
        if not rows:
            rows = [r for r in self.rows if r.kind == "null"]
        return rows

    def kv(self, kinds, value_cols):
        rows = self.group(kinds)
        K = np.stack([r.key for r in rows])
        V = np.stack([r.value[value_cols] for r in rows])
        return K, V

    def full_kv(self):
        K = np.stack([r.key for r in self.rows])
        V = np.stack([r.value for r in self.rows])
        return K, V


class EmbeddingTable:
    """Seeded, immutable token embedding table.

    Construction is a pure function of (seed, vocabulary, d): semantic key
    components come from a seeded Gaussian orthogonalized with QR, so distinct
    tokens' semantic components are mutually orthogonal and unit-norm.
    """

    def __init__(self, dim: int = DEFAULT_DIM, tau: float = DEFAULT_TAU,
                 seed: int = DEFAULT_EMBED_SEED):
        sem_tokens = list(COLORS) + list(PATTERNS) + list(MODIFIERS) + [NULL_TOKEN]
        n_sem = dim - 5
        if n_sem < len(sem_tokens):
            raise ValueError(f"embedding dim {dim} too small for the vocabulary")
        self.dim = dim
        self.tau = float(tau)
        self.seed = int(seed)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
        gauss = rng.standard_normal((n_sem, len(sem_tokens)))
        q, r = np.linalg.qr(gauss)
        q = q * np.sign(np.diag(r))[None, :]  # fix QR sign convention
        self.keys = {}
        self.values = {}
        for i, tok in enumerate(sem_tokens):
            k = np.zeros(dim, dtype=np.float64)
            k[_SEM] = q[:, i]
            self.keys[tok] = k
            self.values[tok] = self._value_of(tok)
        for tok, d in _LOCATION_DIRS.items():
            k = np.zeros(dim, dtype=np.float64)
            k[_LOC] = np.asarray(d) * self.tau
            self.keys[tok] = k
            self.values[tok] = np.array([0.5, 0.5, 0.5, 0.0])
        self._query_cache = {}

    @staticmethod
    def _value_of(tok):
        kind = KIND_OF[tok]
        if kind == "color":
            return np.array(list(ANCHORS[tok]) + [0.0])
        if kind == "pattern":
            return np.array([0.5, 0.5, 0.5, 1.0 if tok == "striped" else 0.0])
        return np.array([0.5, 0.5, 0.5, 0.0])  # null, modifiers

    # -- encoding ----------------------------------------------------------

    def encode(self, tokens) -> PromptEncoding:
        """Phrase-wise prompt encoding; see the module docstring."""
        tokens = list(tokens)
        if not tokens:
            raise ValueError("empty token list; supply at least the null token")
        phrases = _split_phrases(tokens)
        rows = []
        record = []
        for ph in phrases:
            loc_key = np.zeros(self.dim)
            if ph["location"]:
                loc_key = self.keys[ph["location"]]
            if ph["null"]:
                rows.append(Row("null", NULL_TOKEN, self.keys[NULL_TOKEN] + loc_key,
                                self.values[NULL_TOKEN].copy()))
                continue
            if ph["color"]:
                rgb = np.asarray(ANCHORS[ph["color"]], dtype=np.float64)
                for mod in ph["modifiers"]:
                    rgb = apply_modifier(mod, rgb)
                    record.append((mod, ph["color"]))
                value = np.concatenate([rgb, [0.0]])
                key = self.keys[ph["color"]] + loc_key
                key = key.copy()
                key[_CONTENT] = rgb - 0.5  # used only by content-dependent queries
                rows.append(Row("color", ph["color"], key, value))
            for mod in ph["modifiers"]:
                if not ph["color"]:
                    record.append((mod, None))
            if ph["pattern"]:
                rows.append(Row("pattern", ph["pattern"],
                                self.keys[ph["pattern"]] + loc_key,
                                self.values[ph["pattern"]].copy()))
        if not rows:
            rows.append(Row("null", NULL_TOKEN, self.keys[NULL_TOKEN].copy(),
                            self.values[NULL_TOKEN].copy()))
        return PromptEncoding(tokens=tuple(tokens), rows=tuple(rows),
                              modifier_record=tuple(record), dim=self.dim, tau=self.tau)

    # -- queries -----------------------------------------------------------

    def query_field(self, height: int, width: int) -> np.ndarray:
        """Positional query vectors, (H*W, d) float64, row-major."""
        key = (height, width)
        if key not in self._query_cache:
            ys = (np.arange(height) + 0.5) / height - 0.5
            xs = (np.arange(width) + 0.5) / width - 0.5
            q = np.zeros((height * width, self.dim), dtype=np.float64)
            grid_y, grid_x = np.meshgrid(ys, xs, indexing="ij")
            q[:, 0] = grid_x.ravel() * self.tau
            q[:, 1] = grid_y.ravel() * self.tau
            q.setflags(write=False)
            self._query_cache[key] = q
        return self._query_cache[key]

    def queries_for(self, height, width, latent=None):
        q = self.query_field(height, width)
        if latent is None:
            return q
        q = q.copy()
        q[:, _CONTENT] = latent.reshape(-1, 3).astype(np.float64) - 0.5
        return q


def _split_phrases(tokens):
    phrases = []
    cur = None

    def fresh():
        return {"modifiers": [], "color": None, "pattern": None, "location": None,
                "null": False}

    def push():
        nonlocal cur
        if cur is not None:
            phrases.append(cur)
        cur = fresh()

    push()
    for tok in tokens:
        kind = KIND_OF.get(tok)
        if kind is None:
            raise ValueError(f"unknown token {tok!r}")
        if kind == "modifier":
            if cur["color"] is not None or cur["location"] is not None:
                push()
            cur["modifiers"].append(tok)
        elif kind == "color":
            if cur["color"] is not None or cur["null"] or cur["location"] is not None:
                push()
            cur["color"] = tok
        elif kind == "pattern":
            if cur["pattern"] is not None or cur["null"] or cur["location"] is not None:
                push()
            cur["pattern"] = tok
        elif kind == "location":
            cur["location"] = tok
        else:  # null
            if cur["color"] or cur["pattern"] or cur["modifiers"] or cur["null"]:
                push()
            cur["null"] = True
    if cur["color"] or cur["pattern"] or cur["modifiers"] or cur["null"] or cur["location"]:
        phrases.append(cur)
    return [p for p in phrases if p["color"] or p["pattern"] or p["null"]]


# ---------------------------------------------------------------------------
# operations

def cross_attention(queries: np.ndarray, encoding: PromptEncoding) -> np.ndarray:
    """Full-row attention: softmax(Q K^T / sqrt(d)) V, (P, 4) value field."""
    if not encoding.rows:
        raise ValueError("empty encoding: supply at least the null token")
    K, V = encoding.full_kv()
    return kernels.attend(queries, K, V, 1.0 / np.sqrt(encoding.dim))


def attention_mass(queries: np.ndarray, encoding: PromptEncoding) -> np.ndarray:
    """Per-pixel softmax weights over the encoding's rows, (P, n)."""
    K, _ = encoding.full_kv()
    return kernels.attention_weights(queries, K, 1.0 / np.sqrt(encoding.dim))


def stripe_mask(height: int) -> np.ndarray:
    """0/1 per row, alternating every STRIPE_BAND rows."""
    return ((np.arange(height) // STRIPE_BAND) % 2).astype(np.float64)


def predict_x0(latent: np.ndarray, t: float, encoding: PromptEncoding,
               table: EmbeddingTable, content_queries: bool = False) -> np.ndarray:
    """Closed-form clean-image prediction under the given condition."""
    if not (0.0 < t <= 1.0):
        raise ValueError(f"t must be in (0, 1], got {t}")
    if not encoding.rows:
        raise ValueError("empty encoding: supply at least the null token")
    h, w = latent.shape[:2]
    scale = 1.0 / np.sqrt(encoding.dim)
    q = table.queries_for(h, w, latent if content_queries else None)
    kc, vc = encoding.kv(("color",), slice(0, 3))
    rgb = kernels.attend(q, kc, vc, scale).reshape(h, w, 3)
    kp, vp = encoding.kv(("pattern",), slice(3, 4))
    stripe = kernels.attend(q, kp, vp, scale).reshape(h, w, 1)
    bands = stripe_mask(h)[:, None, None]
    out = rgb * (1.0 - STRIPE_DEPTH * stripe * bands)
    return out.astype(np.float32)


def guide(cond: np.ndarray, uncond: np.ndarray, s: float) -> np.ndarray:
    """Classifier-free guidance, clamped to [CLAMP_LO, CLAMP_HI]."""
    if cond.shape != uncond.shape:
        raise ValueError(f"guide shape mismatch {cond.shape} vs {uncond.shape}")
    if s < 0:
        raise ValueError(f"guidance scale must be >= 0, got {s}")
    if s == 1.0:
        return cond.copy()
    if s == 0.0:
        return uncond.copy()
    out = uncond + np.float32(s) * (cond - uncond)
    return np.clip(out, np.float32(CLAMP_LO), np.float32(CLAMP_HI)).astype(np.float32)


def dump_vocab_config() -> str:
    """Human-readable vocabulary and anchor-color table."""
    lines = ["# regioncomp vocabulary", ""]
    for kind in ("colors", "patterns", "modifiers", "locations"):
        lines.append(f"{kind}: {' '.join(VOCABULARY[kind])}")
    lines.append(f"null: {VOCABULARY['null']}")
    lines.append("")
    lines.append("# anchor colors (r, g, b)")
    for name in COLORS:
        r, g, b = ANCHORS[name]
        lines.append(f"{name}: {r:.4f} {g:.4f} {b:.4f}")
    return "\n".join(lines) + "\n"
