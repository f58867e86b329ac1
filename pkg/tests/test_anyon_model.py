"""Tests for src.anyon_model."""

import pytest

from src.anyon_model import (
    ExcitationModel,
    boundary_condensate,
    braid_phase,
    builtin_model,
    builtin_models,
    clifford_eligibility,
    condensable_at_twist,
    condensate_group,
    embed,
    fuse,
    is_generalised_fermion,
    make_wall,
    model_check,
    permutation_wall,
    selfdual_model,
    statistics,
    wall_apply,
)
from src.errors import InvalidSpecError, ModelMismatchError
from src.models import ModelSpec


class TestFusion:
    def test_e_times_m(self, surface_2d):
        e, m = surface_2d.excitation("e"), surface_2d.excitation("m")
        assert fuse(e, m).name == "em"

    def test_self_fusion_is_vacuum(self, surface_2d):
        em = surface_2d.excitation("em")
        assert fuse(em, em).is_vacuum

    def test_vacuum_is_neutral(self, surface_2d):
        m = surface_2d.excitation("m")
        assert fuse(surface_2d.vacuum(), m) == m

    def test_model_mismatch(self, surface_2d, levin_wen):
        with pytest.raises(ModelMismatchError):
            fuse(surface_2d.excitation("e"), levin_wen.excitation("e"))

    def test_label_parsing(self, surface_2d_x2):
        a = surface_2d_x2.excitation("e1*m2")
        assert a == surface_2d_x2.excitation(["m2", "e1"])
        assert a.name == "e1m2"
        assert surface_2d_x2.excitation("1").is_vacuum

    def test_unknown_label(self, surface_2d):
        with pytest.raises(InvalidSpecError):
            surface_2d.excitation("q")


class TestStatistics:
    def test_em_is_fermion(self, surface_2d):
        assert statistics(surface_2d.excitation("em")) == -1

    def test_vacuum_is_boson(self, surface_2d):
        assert statistics(surface_2d.vacuum()) == 1

    def test_e_and_m_are_bosons(self, surface_2d):
        e, m = surface_2d.excitation("e"), surface_2d.excitation("m")
        assert statistics(e) == statistics(m) == 1
        assert statistics(fuse(e, m)) == statistics(e) * statistics(m) * braid_phase(e, m)

    def test_composite_rule_exhaustive(self, surface_2d_x2, levin_wen, surface_3d_x3):
        for model in (surface_2d_x2, levin_wen, surface_3d_x3):
            assert model.statistics_consistent()
            elements = model.all_excitations()
            for a in elements:
                for b in elements:
                    assert statistics(fuse(a, b)) == (
                        statistics(a) * statistics(b) * braid_phase(a, b)
                    )

    def test_generalised_fermions(self, surface_2d, levin_wen):
        assert is_generalised_fermion(surface_2d.excitation("em"))
        assert not is_generalised_fermion(surface_2d.vacuum())
        assert is_generalised_fermion(levin_wen.excitation("e"))


class TestBraiding:
    def test_e_m(self, surface_2d):
        assert braid_phase(surface_2d.excitation("e"), surface_2d.excitation("m")) == -1

    def test_with_vacuum(self, surface_2d):
        assert braid_phase(surface_2d.excitation("em"), surface_2d.vacuum()) == 1

    def test_three_copies_are_independent(self, surface_3d_x3):
        e1 = surface_3d_x3.excitation("e1")
        assert braid_phase(e1, surface_3d_x3.excitation("m1")) == -1
        assert braid_phase(e1, surface_3d_x3.excitation("m2")) == 1

    def test_bilinear(self, surface_2d_x2):
        elements = surface_2d_x2.all_excitations()
        for a in elements:
            for b in elements:
                for c in elements[::3]:
                    assert braid_phase(fuse(a, b), c) == braid_phase(a, c) * braid_phase(b, c)


class TestWalls:
    def test_hadamard_wall(self, surface_2d):
        h = surface_2d.wall("hadamard")
        assert wall_apply(h, surface_2d.excitation("e")).name == "m"
        assert wall_apply(h, surface_2d.vacuum()).is_vacuum

    def test_hadamard_wall_is_involution(self, surface_2d):
        h = surface_2d.wall("hadamard")
        for a in surface_2d.all_excitations():
            assert wall_apply(h, wall_apply(h, a)) == a

    def test_walls_preserve_theta_and_braiding(self, surface_2d_x2, levin_wen):
        for model in (surface_2d_x2, levin_wen):
            for name in model.wall_names:
                w = model.wall(name)
                for a in model.all_excitations():
                    assert statistics(wall_apply(w, a)) == statistics(a)
                    for b in model.all_excitations():
                        assert braid_phase(wall_apply(w, a), wall_apply(w, b)) == braid_phase(a, b)

    def test_statistics_breaking_wall_rejected(self, levin_wen):
        with pytest.raises(InvalidSpecError, match="statistics"):
            permutation_wall(levin_wen, "bad", {"e": "m", "m": "e"})

    def test_dimension_changing_wall_rejected(self):
        model = builtin_model("surface_3d")
        with pytest.raises(InvalidSpecError):
            permutation_wall(model, "bad", {"e": "m", "m": "e"})

    def test_singular_wall_rejected(self, surface_2d):
        with pytest.raises(InvalidSpecError, match="invertible"):
            make_wall(surface_2d, "bad", {"e": ["e"], "m": ["e"]})

    def test_levin_wen_wall(self, levin_wen):
        w = levin_wen.wall("fermion")
        assert wall_apply(w, levin_wen.excitation("m")).name == "em"
        assert wall_apply(w, levin_wen.excitation("e")).name == "e"


class TestCondensableAtTwist:
    def test_hadamard_wall(self, surface_2d):
        names = [c.name for c in condensable_at_twist(surface_2d.wall("hadamard"))]
        assert names == ["1", "em"]

    def test_identity_wall(self, surface_2d):
        names = [c.name for c in condensable_at_twist(surface_2d.wall("identity"))]
        assert names == ["1"]

    def test_two_copy_swap(self, surface_2d_x2):
        names = {c.name for c in condensable_at_twist(surface_2d_x2.wall("swap"))}
        assert names == {"1", "e1e2", "m1m2", "e1m1e2m2"}

    def test_is_subgroup(self, surface_2d_x2):
        for wall_name in surface_2d_x2.wall_names:
            group = condensable_at_twist(surface_2d_x2.wall(wall_name))
            codes = {g.code for g in group}
            assert 0 in codes
            for a in group:
                for b in group:
                    assert fuse(a, b).code in codes


class TestCliffordEligibility:
    @pytest.mark.parametrize(
        "model_name, wall, a, b, twist_dim",
        [
            ("surface_2d", "hadamard", "em", "e", 0),
            ("selfdual_surface(4)", "hadamard", "em", "e", 2),
            ("levin_wen_3d", "fermion", "e", "m", 0),
        ],
    )
    def test_known_schemes(self, model_name, wall, a, b, twist_dim):
        model = builtin_model(model_name)
        report = clifford_eligibility(model, model.wall(wall))
        assert report.eligible
        assert (report.witness_a, report.witness_b) == (a, b)
        assert report.twist_dimension == twist_dim
        assert report.braid_check is True

    def test_identity_wall_not_eligible(self, surface_2d):
        report = clifford_eligibility(surface_2d, surface_2d.wall("identity"))
        assert not report.eligible
        assert "vacuum" in report.reason

    def test_boson_wall_not_eligible(self, surface_2d_x2):
        report = clifford_eligibility(surface_2d_x2, surface_2d_x2.wall("swap"))
        assert not report.eligible
        assert "fermion" in report.reason

    def test_monotone_under_embedding(self):
        for name in builtin_models():
            model = builtin_model(name)
            bigger = embed(model)
            for wall in model.wall_names:
                before = clifford_eligibility(model, model.wall(wall))
                after = clifford_eligibility(bigger, bigger.wall(wall))
                keep = {"eligible", "witness_a", "witness_b", "twist_dimension", "braid_check"}
                assert before.model_dump(include=keep) == after.model_dump(include=keep)

    def test_wall_from_other_model(self, surface_2d, levin_wen):
        with pytest.raises(ModelMismatchError):
            clifford_eligibility(surface_2d, levin_wen.wall("fermion"))


class TestModelLibrary:
    def test_all_builtins_load(self):
        assert set(builtin_models()) >= {
            "surface_2d",
            "surface_2d_x2",
            "surface_2d_x3",
            "surface_3d",
            "levin_wen_3d",
            "selfdual_surface_4d",
            "surface_3d_x3",
        }
        for name in builtin_models():
            assert builtin_model(name).problems() == []

    @pytest.mark.parametrize("D", [2, 4, 6, 8])
    def test_selfdual_family(self, D):
        model = selfdual_model(D)
        assert model.gen_dims == (D // 2 - 1, D // 2 - 1)
        report = clifford_eligibility(model, model.wall("hadamard"))
        assert report.eligible
        assert report.twist_dimension == D - 2

    def test_odd_selfdual_rejected(self):
        with pytest.raises(InvalidSpecError):
            selfdual_model(5)

    def test_dimension_rule_enforced(self, surface_2d):
        spec = surface_2d.to_spec().model_copy(update={"D": 3})
        with pytest.raises(InvalidSpecError, match="D-2"):
            ExcitationModel.from_spec(spec)

    def test_asymmetric_braiding_rejected(self):
        spec = ModelSpec(
            name="broken",
            D=2,
            generators=[{"name": "e", "dim": 0}, {"name": "m", "dim": 0}],
            braiding=[[1, -1], [1, 1]],
        )
        with pytest.raises(InvalidSpecError, match="symmetric"):
            ExcitationModel.from_spec(spec)

    def test_round_trip_spec(self, levin_wen):
        assert ExcitationModel.from_spec(levin_wen.to_spec()) == levin_wen


class TestBoundaryCondensate:
    def test_hole_rough_for_copy_one(self, surface_3d_x3):
        labels = boundary_condensate(surface_3d_x3, [1])
        assert labels == ["e1", "m2", "m3", "s12", "s31"]

    def test_threaded_hole(self, surface_3d_x3):
        labels = boundary_condensate(surface_3d_x3, [1, 2])
        assert labels == ["e1", "e2", "m3", "s12", "s23", "s31"]

    def test_ancilla_holes(self, surface_3d_x3):
        labels = boundary_condensate(surface_3d_x3, [2])
        assert labels == ["m1", "e2", "m3", "s12", "s23"]

    def test_group_skips_labels(self, surface_3d_x3):
        group = condensate_group(surface_3d_x3, ["e1", "m2", "s12"])
        assert {g.name for g in group} == {"1", "e1", "m2", "e1m2"}


class TestModelCheck:
    def test_default_wall_is_first(self, surface_2d):
        report = model_check(surface_2d.to_spec())
        assert report.valid
        assert report.eligibility.wall == "hadamard"
        assert report.eligibility.eligible

    def test_named_wall(self, surface_2d):
        report = model_check(surface_2d.to_spec(), "identity")
        assert report.valid
        assert not report.eligibility.eligible

    def test_unknown_wall(self, surface_2d):
        report = model_check(surface_2d.to_spec(), "nope")
        assert not report.valid
        assert "no wall 'nope'" in report.problems[0]

    def test_problems_reported_not_raised(self):
        spec = ModelSpec(
            name="broken",
            D=2,
            generators=[{"name": "e", "dim": 0}, {"name": "m", "dim": 0}],
            braiding=[[1, -1], [1, 1]],
        )
        report = model_check(spec)
        assert not report.valid
        assert report.eligibility is None
        assert any("not symmetric" in p for p in report.problems)

    def test_model_without_walls(self):
        spec = ModelSpec(name="bare", D=2, generators=[{"name": "e", "dim": 0}], braiding=[[1]])
        report = model_check(spec)
        assert report.valid
        assert report.eligibility is None
