"""Tests for src.defect_scheme."""

import pytest

from src.defect_scheme import (
    braid_action,
    builtin_scheme,
    builtin_schemes,
    derived_atoms,
    descriptor_commutes,
    general_scheme,
    generate_braid_group,
    logical_value,
    parse_descriptor,
    qubit_basis,
    scheme_report,
    setup_from_spec,
)
from src.deformation import load_braid, run_braid
from src.errors import ModelMismatchError, SchemeError
from src.models import BraidSpec, MoveSpec, QubitSpec, RelationSpec, SchemeSpec, TransformEntry
from src.pauli_algebra import (
    CliffordTableau,
    PauliOperator,
    commutes,
    compose,
    compose_all,
    conjugate,
    is_identity,
    is_symplectic,
    random_pauli,
)
from src.utils import builtin_path, load_spec


def scheme_spec(name, **changes):
    spec = load_spec(builtin_path("schemes", name), SchemeSpec)
    return spec.model_copy(update=changes)


@pytest.fixture(scope="module")
def twist_2d():
    return builtin_scheme("twist_2d_surface")


@pytest.fixture(scope="module")
def hole_pair():
    return builtin_scheme("hole_pair_2d")


@pytest.fixture(scope="module")
def universal():
    return builtin_scheme("universal_3d")


class TestDescriptors:
    def test_string_against_loop(self, surface_2d):
        x = parse_descriptor("e:connects(h1,h2)", surface_2d)
        z = parse_descriptor("m:encloses(h1)", surface_2d)
        assert not descriptor_commutes(x, z)

    def test_commuting_excitations(self, surface_2d):
        x = parse_descriptor("e:connects(h1,h2)", surface_2d)
        assert descriptor_commutes(x, parse_descriptor("e:encloses(h1)", surface_2d))

    def test_two_strings_commute(self, surface_2d):
        x = parse_descriptor("e:connects(h1,h2)", surface_2d)
        assert descriptor_commutes(x, parse_descriptor("m:connects(h1,h3)", surface_2d))

    def test_loop_around_both_ends(self, surface_2d):
        x = parse_descriptor("em:connects(TL,TR)", surface_2d)
        assert not descriptor_commutes(x, parse_descriptor("e:encloses_pair(TL,BL)", surface_2d))
        assert descriptor_commutes(x, parse_descriptor("e:encloses_pair(TL,TR)", surface_2d))

    def test_endpoint_order_is_canonical(self, surface_2d):
        a = parse_descriptor("e:connects(h2,h1)", surface_2d)
        assert a == parse_descriptor("e : connects(h1, h2)", surface_2d)
        assert str(a) == "e:connects(h1,h2)"

    def test_wall_crossings(self, surface_2d):
        d = parse_descriptor("em:connects(TL,TR)@hadamard", surface_2d)
        assert d.wall_crossings == ("hadamard",)
        assert str(d).endswith("@hadamard")

    @pytest.mark.parametrize(
        "text",
        ["e-connects(a,b)", "e:encloses(vacuum)", "1:encloses(a)", "q:connects(a,b)", "e:connects(a)"],
    )
    def test_bad_descriptors(self, surface_2d, text):
        with pytest.raises(SchemeError):
            parse_descriptor(text, surface_2d)

    def test_model_mismatch(self, surface_2d, levin_wen):
        with pytest.raises(ModelMismatchError):
            descriptor_commutes(
                parse_descriptor("e:connects(a,b)", surface_2d),
                parse_descriptor("m:encloses(a)", levin_wen),
            )


class TestSetupValidation:
    def test_builtin_bases(self, twist_2d, hole_pair, universal):
        assert len(qubit_basis(twist_2d)) == 1
        assert hole_pair.labels == ["r", "s"]
        assert universal.labels == ["1", "2", "3", "a", "b"]

    def test_empty_setup(self):
        setup = setup_from_spec(SchemeSpec(name="empty", model="surface_2d"))
        assert qubit_basis(setup) == []
        assert generate_braid_group(setup).order == 1

    def test_excitation_must_condense_at_endpoints(self):
        spec = scheme_spec(
            "hole_pair_2d",
            qubits=[QubitSpec(name="r", x="m:connects(r,R)", z="e:encloses(r)")],
            moves=[],
        )
        with pytest.raises(SchemeError, match="cannot condense"):
            setup_from_spec(spec)

    def test_commuting_pair_rejected(self):
        spec = scheme_spec(
            "hole_pair_2d",
            qubits=[QubitSpec(name="r", x="e:connects(r,R)", z="m:encloses_pair(r,R)")],
            moves=[],
        )
        with pytest.raises(SchemeError, match="commute"):
            setup_from_spec(spec)

    def test_cross_pair_named(self):
        spec = scheme_spec(
            "hole_pair_2d",
            qubits=[
                QubitSpec(name="r", x="e:connects(r,R)", z="m:encloses(r)"),
                QubitSpec(name="t", x="e:encloses(s)", z="m:encloses(r)"),
            ],
            moves=[],
        )
        with pytest.raises(SchemeError, match="Xr = e:connects\\(R,r\\) and Zt"):
            setup_from_spec(spec)

    def test_relation_cycle(self):
        spec = scheme_spec("universal_3d")
        relations = spec.relations + [RelationSpec(kind="concentric", outer="h1", inner="h3")]
        with pytest.raises(SchemeError, match="cycle"):
            setup_from_spec(spec.model_copy(update={"relations": relations}))

    def test_extended_string_needs_threading(self):
        with pytest.raises(SchemeError, match="no puncture threads"):
            setup_from_spec(scheme_spec("universal_3d", relations=[]))

    def test_twist_condensable_set_checked(self):
        spec = scheme_spec("twist_2d_surface")
        spec.defects[0] = spec.defects[0].model_copy(update={"condensable": ["e"]})
        with pytest.raises(SchemeError, match="does not match"):
            setup_from_spec(spec)

    def test_twist_needs_wall(self):
        spec = scheme_spec("twist_2d_surface")
        spec.defects[0] = spec.defects[0].model_copy(update={"wall": None})
        with pytest.raises(SchemeError, match="needs a wall"):
            setup_from_spec(spec)

    def test_unknown_defect(self, twist_2d):
        with pytest.raises(SchemeError, match="unknown defect"):
            twist_2d.descriptor("em:connects(TL,XX)")

    def test_wall_crossing_must_exist(self, twist_2d):
        assert twist_2d.descriptor("em:connects(TL,TR)@hadamard").wall_crossings
        with pytest.raises(SchemeError, match="crosses wall"):
            twist_2d.descriptor("em:connects(TL,TR)@identity")


class TestMoveValidation:
    def test_untouched_descriptor_must_stay(self):
        move = MoveSpec(
            name="bad",
            kind="monodromy",
            defects=["r", "R"],
            transform={"e:encloses(s)": TransformEntry(product=["e:encloses(s)"], phase=2)},
        )
        with pytest.raises(SchemeError, match="references neither"):
            setup_from_spec(scheme_spec("hole_pair_2d", moves=[move]))

    def test_only_monodromies_are_derived(self):
        move = MoveSpec(name="bad", kind="exchange", defects=["r", "s"], derived=True)
        with pytest.raises(SchemeError, match="only monodromies"):
            setup_from_spec(scheme_spec("hole_pair_2d", moves=[move]))

    def test_exchange_squared_must_match_monodromy(self):
        spec = scheme_spec("twist_2d_surface")
        loop = spec.moves[2].model_copy(update={"transform": {}})
        spec.moves[2] = loop
        with pytest.raises(SchemeError, match="squared differs"):
            setup_from_spec(spec)

    def test_commutation_must_be_preserved(self):
        spec = scheme_spec("twist_2d_surface")
        z = "e:encloses_pair(TL,BL)"
        spec.moves[1] = spec.moves[1].model_copy(
            update={"transform": {"em:connects(TL,TR)": TransformEntry(product=[z])}}
        )
        with pytest.raises(SchemeError, match="does not preserve"):
            setup_from_spec(spec)

    def test_non_hermitian_image(self):
        spec = scheme_spec("twist_2d_surface")
        x = "em:connects(TL,TR)"
        spec.moves[0] = spec.moves[0].model_copy(
            update={"transform": {x: TransformEntry(product=[x], phase=1)}}
        )
        with pytest.raises(SchemeError, match="non-Hermitian"):
            setup_from_spec(spec)


class TestTwistScheme:
    def test_left_exchange_is_phase_gate(self, twist_2d):
        tableau = braid_action(twist_2d, twist_2d.move("swap_left"))
        assert tableau == CliffordTableau.phase(1, 0)
        assert tableau.as_dict(twist_2d.labels) == {"Xq": "+Y", "Zq": "+Z"}

    def test_diagonal_exchange_is_hadamard(self, twist_2d):
        assert braid_action(twist_2d, twist_2d.move("swap_diagonal")) == CliffordTableau.hadamard(1, 0)

    def test_exchange_twice_is_z_conjugation(self, twist_2d):
        s = braid_action(twist_2d, twist_2d.move("swap_left"))
        assert compose(s, s) == CliffordTableau.pauli(PauliOperator.from_string("Z"))
        assert compose(s, s) == braid_action(twist_2d, twist_2d.move("loop_left"))

    def test_full_group(self, twist_2d):
        report = scheme_report(twist_2d)
        assert report.group_order == 24
        assert not report.truncated
        assert report.all_clifford
        assert all(m.symplectic for m in report.moves)

    def test_single_monodromy(self, twist_2d):
        assert generate_braid_group(twist_2d, [twist_2d.move("loop_left")]).order == 2

    def test_diagonal_monodromy_is_trivial(self, twist_2d):
        assert is_identity(braid_action(twist_2d, twist_2d.move("loop_diagonal")))


class TestGeneralConstruction:
    def test_matches_two_dimensional_scheme(self, twist_2d, surface_2d):
        general = general_scheme(surface_2d, "hadamard")
        assert general.name == "general(surface_2d,hadamard)"
        for move in twist_2d.moves:
            assert braid_action(general, general.move(move.name)) == braid_action(twist_2d, move)

    def test_selfdual_four_dimensions(self):
        setup = builtin_scheme("selfdual_surface(4)")
        assert set(setup.defects) == {"OL", "IL", "OR", "IR", "P"}
        assert setup.defects["OL"].dim == 2
        assert setup.defects["P"].dim == 1
        assert setup.threaded == {"OL", "IL", "OR", "IR"}
        assert braid_action(setup, setup.move("swap_left")) == CliffordTableau.phase(1, 0)
        assert braid_action(setup, setup.move("swap_diagonal")) == CliffordTableau.hadamard(1, 0)
        assert scheme_report(setup).group_order == 24

    def test_levin_wen(self):
        setup = builtin_scheme("levin_wen_3d")
        assert "P" not in setup.defects
        assert str(setup.qubits[0].x) == "e:connects(TL,TR)"
        assert str(setup.qubits[0].z) == "m:encloses_pair(BL,TL)"
        assert braid_action(setup, setup.move("swap_left")) == CliffordTableau.phase(1, 0)
        assert braid_action(setup, setup.move("swap_diagonal")) == CliffordTableau.hadamard(1, 0)

    def test_general_by_name(self):
        setup = builtin_scheme("general(selfdual_surface(6),hadamard)")
        assert setup.defects["OL"].dim == 4
        assert scheme_report(setup).group_order == 24

    def test_ineligible_wall(self, surface_2d):
        with pytest.raises(SchemeError, match="not eligible"):
            general_scheme(surface_2d, "identity")

    def test_unknown_scheme(self):
        with pytest.raises(SchemeError, match="unknown scheme"):
            builtin_scheme("nonexistent")

    def test_listing(self):
        assert {"twist_2d_surface", "hole_pair_2d", "universal_3d", "levin_wen_3d"} <= set(
            builtin_schemes()
        )


class TestHoleSchemes:
    def test_rough_around_smooth_is_cnot(self, hole_pair):
        tableau = braid_action(hole_pair, hole_pair.move("rough_around_smooth"))
        assert tableau == CliffordTableau.cnot(2, 0, 1)

    @pytest.mark.parametrize("name", ["rough_around_rough", "smooth_around_smooth"])
    def test_same_type_monodromy_is_trivial(self, hole_pair, name):
        assert is_identity(braid_action(hole_pair, hole_pair.move(name)))

    def test_matches_microscopic_braid(self, hole_pair):
        code, script, _ = load_braid(load_spec(builtin_path("braids", "rough_around_smooth"), BraidSpec))
        microscopic = run_braid(code, script).tableau
        # the lattice orders the smooth hole first
        swap = CliffordTableau.swap(2, 0, 1)
        relabelled = compose(compose(swap, microscopic), swap)
        assert relabelled == braid_action(hole_pair, hole_pair.move("rough_around_smooth"))


class TestUniversalScheme:
    def test_encodes_five_qubits(self, universal):
        assert universal.k == 5
        assert len(universal.defects) == 5

    def test_derived_loop(self, universal):
        move = universal.move("h2_around_ha")
        xa = universal.qubits[3].x
        assert [str(d) for d in derived_atoms(universal, move, xa)] == [
            "m1:connects(ha,hb)",
            "m1:encloses(h2)",
        ]
        assert logical_value(universal, universal.descriptor("m1:encloses(h2)")) == (
            PauliOperator.from_string("XIIII")
        )

    @pytest.mark.parametrize("name", ["h2_around_ha", "h1_around_ha"])
    def test_braid_is_double_cnot(self, universal, name):
        tableau = braid_action(universal, universal.move(name))
        expected = compose(CliffordTableau.cnot(5, 3, 0), CliffordTableau.cnot(5, 1, 4))
        assert tableau == expected
        assert tableau.as_dict(universal.labels)["X2"] == "+IXIIX"

    def test_report(self, universal):
        report = scheme_report(universal)
        assert report.qubits == ["1", "2", "3", "a", "b"]
        assert report.group_order == 2


class TestRandomCompositions:
    def test_compositions_stay_clifford(self, rng):
        actions = {}
        for name in builtin_schemes():
            setup = builtin_scheme(name)
            actions[name] = (setup.k, [braid_action(setup, m) for m in setup.moves])
        names = sorted(actions)
        for _ in range(1000):
            k, moves = actions[names[int(rng.integers(len(names)))]]
            picks = rng.integers(0, len(moves), size=int(rng.integers(1, 9)))
            tableau = compose_all([moves[i] for i in picks], k)
            assert is_symplectic(tableau)
            images = list(tableau.x_images) + list(tableau.z_images)
            assert all(image.is_hermitian for image in images)
            p, q = random_pauli(k, rng), random_pauli(k, rng)
            assert commutes(conjugate(tableau, p), conjugate(tableau, q)) == commutes(p, q)
