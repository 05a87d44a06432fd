"""Scene DSL: a closed-vocabulary layout language and its JSON interchange form.

Grammar (statements separated by ';'):

    scene <H>x<W>
    region [<y_off>,<y_scale>,<x_off>,<x_scale>] base "<tokens>" detail "<tokens>" (refine [<...>])?
    hints on|off
    global "<tokens>"

Tokens come from a fixed vocabulary; the parser reports errors with line and
column. Scenes whose regions do not cover the canvas get a synthetic white
background region appended covering the bounding box of the uncovered pixels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .latents import RegionRect, rect_to_pixels

COLORS = ("red", "green", "blue", "yellow", "cyan", "magenta", "white", "black")
PATTERNS = ("solid", "striped")
MODIFIERS = ("light", "dark", "vivid")
LOCATIONS = ("left", "right", "top", "bottom")
NULL_TOKEN = "∅"

KIND_OF = {w: "color" for w in COLORS}
KIND_OF.update({w: "pattern" for w in PATTERNS})
KIND_OF.update({w: "modifier" for w in MODIFIERS})
KIND_OF.update({w: "location" for w in LOCATIONS})
KIND_OF[NULL_TOKEN] = "null"

VOCABULARY = {
    "colors": list(COLORS),
    "patterns": list(PATTERNS),
    "modifiers": list(MODIFIERS),
    "locations": list(LOCATIONS),
    "null": NULL_TOKEN,
}

# A region centroid closer to canvas center than this yields no location hint.
CENTER_DEADZONE = 0.05


class SceneError(ValueError):
    """Parse or validation failure, carrying a source position when known."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, col {col})"
        super().__init__(message)

    @property
    def position(self):
        if self.line is None:
            return None
        return {"line": self.line, "col": self.col}


def token_kind(word: str) -> str:
    try:
        return KIND_OF[word]
    except KeyError:
        raise SceneError(f"unknown token {word!r}") from None


@dataclass(frozen=True)
class RegionSpec:
    rect: RegionRect
    fundamental: tuple  # exactly one color + one pattern
    descriptive: tuple  # fundamental plus zero or more modifiers
    refine_rect: RegionRect = None
    synthetic: bool = False

    def __post_init__(self):
        if self.refine_rect is None:
            object.__setattr__(self, "refine_rect", self.rect)

    @property
    def color(self):
        return next(t for t in self.fundamental if KIND_OF[t] == "color")

    @property
    def pattern(self):
        return next(t for t in self.fundamental if KIND_OF[t] == "pattern")

    @property
    def modifiers(self):
        return tuple(t for t in self.descriptive if KIND_OF[t] == "modifier")

    def to_dict(self):
        return {
            "rect": self.rect.to_dict(),
            "base": list(self.fundamental),
            "detail": list(self.descriptive),
            "refine_rect": self.refine_rect.to_dict(),
            "synthetic": self.synthetic,
        }

    @classmethod
    def from_dict(cls, d) -> "RegionSpec":
        spec = cls(
            rect=RegionRect.from_dict(d["rect"]),
            fundamental=tuple(d["base"]),
            descriptive=tuple(d["detail"]),
            refine_rect=RegionRect.from_dict(d["refine_rect"]) if d.get("refine_rect") else None,
            synthetic=bool(d.get("synthetic", False)),
        )
        validate_region_tokens(spec.fundamental, spec.descriptive)
        return spec


def validate_region_tokens(fundamental, descriptive, line=None, col=None):
    def err(msg):
        raise SceneError(msg, line, col)

    kinds = [token_kind(t) for t in fundamental]
    if kinds.count("color") != 1 or kinds.count("pattern") != 1:
        if kinds.count("color") > 1:
            err("duplicate color in one base clause")
        err("base clause needs exactly one color and one pattern")
    if any(k not in ("color", "pattern") for k in kinds):
        err("base clause allows only color and pattern tokens")
    dkinds = [token_kind(t) for t in descriptive]
    if "location" in kinds or "location" in dkinds:
        err("location tokens are not allowed inside region prompts")
    base_cp = sorted(t for t in fundamental)
    detail_cp = sorted(t for t in descriptive if KIND_OF[t] in ("color", "pattern"))
    if base_cp != detail_cp:
        err("detail clause must contain the base color and pattern")


@dataclass(frozen=True)
class SceneSpec:
    canvas_height: int
    canvas_width: int
    regions: tuple  # ordered RegionSpec list, k >= 1
    location_hints: bool = True
    global_override: tuple = None  # explicit global tokens, else derived

    @property
    def k(self):
        return len(self.regions)

    def global_tokens(self):
        if self.global_override is not None:
            return list(self.global_override)
        return derive_global_prompt(self)

    def to_dict(self):
        d = {
            "canvas_height": self.canvas_height,
            "canvas_width": self.canvas_width,
            "hints": self.location_hints,
            "regions": [r.to_dict() for r in self.regions],
        }
        if self.global_override is not None:
            d["global"] = list(self.global_override)
        return d

    @classmethod
    def from_dict(cls, d) -> "SceneSpec":
        scene = cls(
            canvas_height=int(d["canvas_height"]),
            canvas_width=int(d["canvas_width"]),
            regions=tuple(RegionSpec.from_dict(r) for r in d["regions"]),
            location_hints=bool(d.get("hints", True)),
            global_override=tuple(d["global"]) if d.get("global") is not None else None,
        )
        if scene.k < 1:
            raise SceneError("scene needs at least one region")
        return ensure_coverage(scene)


def ensure_coverage(scene: SceneSpec) -> SceneSpec:
    """Append a synthetic white background region if the canvas is not covered."""
    h, w = scene.canvas_height, scene.canvas_width
    covered = np.zeros((h, w), dtype=bool)
    for r in scene.regions:
        p = rect_to_pixels(r.rect, h, w)
        covered[p.row_start : p.row_end, p.col_start : p.col_end] = True
    if covered.all():
        return scene
    rows = np.where(~covered.all(axis=1))[0]
    cols = np.where(~covered.all(axis=0))[0]
    rect = RegionRect(
        y_offset=rows[0] / h,
        y_scale=(rows[-1] + 1 - rows[0]) / h,
        x_offset=cols[0] / w,
        x_scale=(cols[-1] + 1 - cols[0]) / w,
    ).validate()
    background = RegionSpec(
        rect=rect,
        fundamental=("white", "solid"),
        descriptive=("white", "solid"),
        synthetic=True,
    )
    # Prepended so explicit regions keep list-order priority over the backdrop.
    return dc_replace(scene, regions=(background,) + scene.regions)


def derive_global_prompt(scene: SceneSpec) -> list:
    """Concatenate fundamental tokens per region, plus a location hint when on."""
    out = []
    for r in scene.regions:
        out.extend(r.fundamental)
        if scene.location_hints:
            hint = location_hint(r.rect)
            if hint is not None:
                out.append(hint)
    return out


def location_hint(rect: RegionRect):
    cx, cy = rect.centroid()
    dx, dy = cx - 0.5, cy - 0.5
    if max(abs(dx), abs(dy)) <= CENTER_DEADZONE:
        return None
    if abs(dx) >= abs(dy):  # ties break toward the horizontal axis
        return "left" if dx < 0 else "right"
    return "top" if dy < 0 else "bottom"


# ---------------------------------------------------------------------------
# DSL parser

class _Cursor:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def loc(self, pos=None):
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def err(self, msg, pos=None):
        line, col = self.loc(pos)
        raise SceneError(msg, line, col)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def eof(self):
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek_word(self):
        self.skip_ws()
        i = self.pos
        while i < len(self.text) and (self.text[i].isalnum() or self.text[i] == "_"):
            i += 1
        return self.text[self.pos : i]

    def take_word(self):
        w = self.peek_word()
        if not w:
            self.err("expected a word")
        self.pos += len(w)
        return w

    def expect(self, ch):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            self.err(f"expected {ch!r}")
        self.pos += 1

    def try_char(self, ch):
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == ch:
            self.pos += 1
            return True
        return False

    def take_number(self):
        self.skip_ws()
        i = self.pos
        while i < len(self.text) and (self.text[i].isdigit() or self.text[i] in ".-+e"):
            i += 1
        tok = self.text[self.pos : i]
        try:
            val = float(tok)
        except ValueError:
            self.err(f"expected a number, got {tok!r}")
        self.pos = i
        return val

    def take_string(self):
        self.skip_ws()
        start = self.pos
        self.expect('"')
        end = self.text.find('"', self.pos)
        if end < 0:
            self.err("unterminated string", start)
        s = self.text[self.pos : end]
        self.pos = end + 1
        return s, start


def _parse_rect(cur: _Cursor) -> RegionRect:
    cur.skip_ws()
    start = cur.pos
    cur.expect("[")
    vals = [cur.take_number()]
    for _ in range(3):
        cur.expect(",")
        vals.append(cur.take_number())
    cur.expect("]")
    try:
        return RegionRect(*vals).validate()
    except ValueError as e:
        cur.err(str(e), start)


def _parse_tokens(cur: _Cursor, clause: str):
    raw, start = cur.take_string()
    toks = tuple(raw.split())
    if not toks and clause == "base":
        cur.err("missing base clause tokens", start)
    for t in toks:
        if t not in KIND_OF:
            cur.err(f"unknown token {t!r} in {clause} clause", start)
    return toks, start


def parse_scene(text: str) -> SceneSpec:
    if not text or not text.strip():
        raise SceneError("empty scene source")
    cur = _Cursor(text)
    canvas = None
    regions = []
    hints = True
    global_override = None
    while not cur.eof():
        word_pos = cur.pos
        cur.skip_ws()
        word_pos = cur.pos
        word = cur.take_word()
        if word == "scene":
            h = cur.take_number()
            cur.skip_ws()
            if cur.pos >= len(cur.text) or cur.text[cur.pos] not in "xX":
                cur.err("expected 'x' between height and width")
            cur.pos += 1
            w = cur.take_number()
            if h != int(h) or w != int(w) or h < 1 or w < 1:
                cur.err("canvas dims must be positive integers", word_pos)
            canvas = (int(h), int(w))
        elif word == "region":
            rect = _parse_rect(cur)
            kw = cur.take_word()
            if kw != "base":
                cur.err("missing base clause")
            base, base_pos = _parse_tokens(cur, "base")
            detail = base
            refine = None
            while True:
                nxt = cur.peek_word()
                if nxt == "detail":
                    cur.take_word()
                    detail, _ = _parse_tokens(cur, "detail")
                elif nxt == "refine":
                    cur.take_word()
                    refine = _parse_rect(cur)
                else:
                    break
            line, col = cur.loc(base_pos)
            validate_region_tokens(base, detail, line, col)
            regions.append(
                RegionSpec(rect=rect, fundamental=base, descriptive=detail, refine_rect=refine)
            )
        elif word == "hints":
            mode = cur.take_word()
            if mode not in ("on", "off"):
                cur.err("hints must be 'on' or 'off'")
            hints = mode == "on"
        elif word == "global":
            toks, _ = _parse_tokens(cur, "global")
            global_override = toks
        else:
            cur.err(f"unknown statement {word!r}", word_pos)
        if not cur.eof():
            cur.expect(";")
    if canvas is None:
        raise SceneError("missing 'scene <H>x<W>' declaration")
    if not regions:
        raise SceneError("scene needs at least one region")
    scene = SceneSpec(
        canvas_height=canvas[0],
        canvas_width=canvas[1],
        regions=tuple(regions),
        location_hints=hints,
        global_override=global_override,
    )
    return ensure_coverage(scene)


def serialize_scene(scene: SceneSpec) -> str:
    """JSON interchange document; scene_from_json(serialize_scene(s)) == s."""
    return json.dumps(scene.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)


def scene_from_json(text: str) -> SceneSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneError(f"invalid scene document: {e}") from None
    return SceneSpec.from_dict(doc)
