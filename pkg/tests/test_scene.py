import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regioncomp import bench
from regioncomp.latents import RegionRect
from regioncomp.scene import (
    RegionSpec,
    SceneError,
    SceneSpec,
    derive_global_prompt,
    parse_scene,
    scene_from_json,
    serialize_scene,
)

TWO_REGION = (
    'scene 64x64; '
    'region [0,1,0,0.5] base "red solid" detail "vivid red solid"; '
    'region [0,1,0.5,0.5] base "blue striped" detail "blue striped"'
)


class TestParse:
    def test_two_region_split(self):
        scene = parse_scene(TWO_REGION)
        assert scene.k == 2
        assert scene.canvas_height == scene.canvas_width == 64
        left, right = scene.regions
        assert left.rect == RegionRect(0, 1, 0, 0.5)
        assert left.fundamental == ("red", "solid")
        assert left.descriptive == ("vivid", "red", "solid")
        assert right.rect == RegionRect(0, 1, 0.5, 0.5)
        assert right.refine_rect == right.rect  # default

    def test_single_region_identity(self):
        scene = parse_scene('scene 32x32; region [0,1,0,1] base "green solid" detail "green solid"')
        assert scene.k == 1
        assert scene.regions[0].fundamental == ("green", "solid")

    def test_rect_invariant_violation_position(self):
        with pytest.raises(SceneError, match="y_offset\\+y_scale exceeds 1") as exc:
            parse_scene('scene 8x8; region [0,1.5,0,1] base "red solid"')
        assert exc.value.position is not None

    def test_unknown_token(self):
        with pytest.raises(SceneError, match="unknown token 'mauve'"):
            parse_scene('scene 8x8; region [0,1,0,1] base "mauve solid"')

    def test_duplicate_color(self):
        with pytest.raises(SceneError, match="duplicate color"):
            parse_scene('scene 8x8; region [0,1,0,1] base "red blue solid"')

    def test_missing_base_clause(self):
        with pytest.raises(SceneError, match="missing base"):
            parse_scene('scene 8x8; region [0,1,0,1] detail "red solid"')

    def test_location_token_rejected_in_region(self):
        with pytest.raises(SceneError, match="location tokens"):
            parse_scene('scene 8x8; region [0,1,0,1] base "red solid" detail "red solid left"')

    def test_hints_and_global_override(self):
        scene = parse_scene(TWO_REGION + '; hints off; global "red solid"')
        assert scene.location_hints is False
        assert scene.global_tokens() == ["red", "solid"]

    def test_refine_clause(self):
        scene = parse_scene(
            'scene 16x16; region [0,1,0,1] base "red solid" refine [0,0.5,0,0.5]')
        assert scene.regions[0].refine_rect == RegionRect(0, 0.5, 0, 0.5)

    def test_empty_source(self):
        with pytest.raises(SceneError):
            parse_scene("   ")

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=80))
    def test_parse_never_panics(self, text):
        try:
            scene = parse_scene(text)
        except SceneError:
            return
        assert isinstance(scene, SceneSpec)


class TestBackground:
    def test_synthesized_background(self):
        scene = parse_scene('scene 16x16; region [0,1,0,0.5] base "red solid"')
        assert scene.k == 2
        bg = scene.regions[0]  # prepended so explicit regions win overlaps
        assert bg.synthetic
        assert bg.fundamental == ("white", "solid")
        assert bg.rect.x_offset == 0.5
        doc = serialize_scene(scene)
        assert '"synthetic": true' in doc

    def test_covering_scene_untouched(self):
        scene = parse_scene(TWO_REGION)
        assert not any(r.synthetic for r in scene.regions)


class TestGlobalPrompt:
    def test_half_split_hints_on(self):
        scene = parse_scene(TWO_REGION)
        assert derive_global_prompt(scene) == ["red", "solid", "left", "blue", "striped", "right"]

    def test_hints_off(self):
        scene = parse_scene(TWO_REGION + "; hints off")
        assert derive_global_prompt(scene) == ["red", "solid", "blue", "striped"]

    def test_centered_region_no_hint(self):
        scene = parse_scene('scene 8x8; region [0,1,0,1] base "green solid"')
        assert derive_global_prompt(scene) == ["green", "solid"]

    def test_permutation_covariance(self):
        scene = parse_scene(TWO_REGION)
        swapped = SceneSpec(
            canvas_height=scene.canvas_height,
            canvas_width=scene.canvas_width,
            regions=tuple(reversed(scene.regions)),
            location_hints=True,
        )
        p = derive_global_prompt(scene)
        q = derive_global_prompt(swapped)
        assert q == p[3:] + p[:3]

    def test_vertical_hint(self):
        scene = parse_scene(
            'scene 8x8; region [0,0.5,0,1] base "red solid"; '
            'region [0.5,0.5,0,1] base "blue solid"')
        assert derive_global_prompt(scene) == ["red", "solid", "top", "blue", "solid", "bottom"]


class TestRoundTrip:
    def test_two_region_round_trip(self):
        scene = parse_scene(TWO_REGION)
        assert scene_from_json(serialize_scene(scene)) == scene

    def test_random_scenes_round_trip(self):
        suite = bench.make_suite("mixed", count=100)
        for scene in bench.generate_suite(suite):
            assert scene_from_json(serialize_scene(scene)) == scene

    def test_invalid_document(self):
        with pytest.raises(SceneError):
            scene_from_json("{not json")
