import dataclasses
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cases import TABLES, build_model, from_increments
from volgrowth.assembly import (
    BLOCK,
    InterfaceMismatch,
    ManifoldModel,
    MissingPiece,
    PieceInstance,
    RadialFunction,
    ScheduleNotFound,
    TRUNK,
    assemble,
    choose_levels,
    discrete_growth,
    discrete_growth_table,
    level_restricted,
    radial,
    validate_model,
)
from volgrowth.growth import GrowthFunction, same_growth_type
from volgrowth.pieces import (
    DEFAULT_BOUNDS,
    LOWER_DIM,
    TORUS,
    Catalog,
    CatalogBounds,
    Kind,
    default_catalog,
    make_block,
    make_sphere_piece,
)
from volgrowth.tree import LevelSet, build_tree, lower_density_profile

LINEAR = GrowthFunction.from_function(lambda n: 2 * n + 1, 20)


def z_oracle(model, n):
    """Sum unit shells one at a time: shell k of an instance sits at r = base + k - 1."""
    total = 0
    for inst in model.instances:
        for comp in inst.spec.components:
            prof = comp.volume_profile
            for k in range(1, len(prof)):
                if model.base(inst) + k - 1 <= n:
                    total += inst.strand_multiplicity * (prof[k] - prof[k - 1])
    return total


def single_instance_model(spec, mult=1):
    tree = build_tree(GrowthFunction((1,)), raw=True)
    inst = PieceInstance(0, spec, 0, mult, 0, TRUNK)
    return ManifoldModel(tree, LevelSet(), default_catalog(), (inst,), {0: 0})


class TestAssemble:
    def test_linear_one_block(self):
        S = LevelSet(((2, 1),))
        m = build_model(LINEAR, S)
        trunk = [m.instances[m.placements[m.tree.trunk(n)]] for n in range(6)]
        kinds = [i.spec.kind for i in trunk]
        assert kinds[:4] == [Kind.SPHERE3, Kind.SPHERE2, Kind.BLOCK, Kind.SPHERE3]
        for v in m.tree.vertices:
            if not m.tree.children(v.id):
                assert m.instances[m.placements[v.id]].spec.kind is Kind.SPHERE1
        assert validate_model(m).ok

    def test_empty_schedule_is_all_spheres(self):
        m = build_model(LINEAR)
        assert all(i.spec.kind.is_sphere for i in m.instances)
        assert validate_model(m).ok

    def test_lower_dim_interfaces(self):
        S = LevelSet(((2, 1), (6, 2)))
        m = build_model(LINEAR, S, mode=LOWER_DIM)
        assert validate_model(m).ok
        torus_glues = 0
        for g in m.gluings:
            port = m.instances[g.parent].spec.components[g.parent_component].plus_kinds[g.port]
            child = m.instances[g.child].spec.components[g.component].minus_kind
            assert port == child
            torus_glues += port == TORUS
        trunk_pieces = {m.placements[m.tree.trunk(n)] for n in range(LINEAR.horizon + 1)}
        assert torus_glues == len(trunk_pieces) - 1  # one torus interface between consecutive trunk pieces

    def test_multi_strand_multiplicity(self):
        b = DEFAULT_BOUNDS
        spheres = {k: make_sphere_piece(k, b) for k in (Kind.SPHERE1, Kind.SPHERE2, Kind.SPHERE3)}
        blocks = (make_block(0, 1, 1, [3], b), make_block(1, 1, 3, [1, 1, 1], b))
        cat = Catalog(b, spheres, blocks)
        S = LevelSet(((2, 1), (6, 1)))
        m = assemble(LINEAR, S, build_tree(LINEAR, S), cat)
        assert validate_model(m).ok
        assert [m.instances[m.placements[m.tree.trunk(n)]].strand_multiplicity for n in range(3, 6)] == [3, 3, 3]
        assert m.instances[m.placements[m.tree.trunk(7)]].strand_multiplicity == 3

    def test_missing_block(self):
        S = LevelSet(((2, 1),))
        with pytest.raises(MissingPiece):
            assemble(LINEAR, S, build_tree(LINEAR, S), default_catalog(block_heights=()))

    def test_interface_mismatch(self):
        S = LevelSet(((2, 1),))
        cat = default_catalog(block_heights=(1,))
        cat = dataclasses.replace(cat, blocks=(make_block(0, 1, 1, [1], DEFAULT_BOUNDS, interface=TORUS),))
        with pytest.raises(InterfaceMismatch):
            assemble(LINEAR, S, build_tree(LINEAR, S), cat)

    def test_deterministic(self):
        S = LevelSet(((3, 1),))
        a, b = build_model(LINEAR, S), build_model(LINEAR, S)
        assert a.instances == b.instances and a.gluings == b.gluings
        assert discrete_growth_table(a) == discrete_growth_table(b)


class TestValidate:
    def test_corrupted_multiplicity(self):
        m = build_model(LINEAR, LevelSet(((2, 1),)))
        vid = m.tree.trunk(4)
        iid = m.placements[vid]
        insts = list(m.instances)
        insts[iid] = dataclasses.replace(insts[iid], strand_multiplicity=2)
        rep = validate_model(dataclasses.replace(m, instances=tuple(insts)))
        bad = [c for c in rep.failures() if c.name == "multiplicity"]
        assert bad and bad[0].vertex == vid

    def test_block_wrong_interval(self):
        m = build_model(LINEAR, LevelSet(((2, 1),)))
        iid = m.placements[m.tree.trunk(2)]
        insts = list(m.instances)
        insts[iid] = dataclasses.replace(insts[iid], level=3)
        rep = validate_model(dataclasses.replace(m, instances=tuple(insts)))
        assert any(c.name == "placement" for c in rep.failures())


class TestRadial:
    def test_formula(self):
        r = RadialFunction({0: 24}, 6)
        assert r(0, Fraction(27, 10)) == 26

    def test_on_model(self):
        m = build_model(LINEAR, LevelSet(((5, 2),)))
        r = radial(m)
        sphere = m.placements[m.tree.trunk(4)]
        block = m.placements[m.tree.trunk(5)]
        assert r(sphere, Fraction(27, 10)) == 26
        assert m.instances[block].spec.t_units == 2
        assert r(block, Fraction(119, 10)) == 41
        assert r(m.basepiece.id, 0) == 0


class TestDiscreteGrowth:
    SPEC = make_sphere_piece("Sphere2", CatalogBounds(12, 1, 4, 2), t_P=4, T_P=4, increments=[2, 2, 2, 2])

    def test_single_strand(self):
        m = single_instance_model(self.SPEC)
        assert discrete_growth(m, 3) == 8 == z_oracle(m, 3)
        assert discrete_growth(m, 0) == 2
        assert discrete_growth(m, -1) == 0

    def test_two_strands(self):
        one, two = single_instance_model(self.SPEC), single_instance_model(self.SPEC, 2)
        for n in range(-2, 8):
            assert discrete_growth(two, n) == 2 * discrete_growth(one, n)

    @pytest.mark.parametrize("name", ["linear", "quadratic-cap20", "ramp-sqrt"])
    def test_table_matches_oracle(self, name):
        v = TABLES[name].truncate(25)
        m = build_model(v, LevelSet(((8, 1), (16, 1))))
        z = discrete_growth_table(m)
        for n in range(0, m.length_horizon + 1, 7):
            assert z[n] == discrete_growth(m, n) == z_oracle(m, n)
        assert z[-1] == m.total_volume()
        assert all(a <= b for a, b in zip(z, z[1:]))

    def test_block_dominance(self):
        b = CatalogBounds(6, 1, 4, 2, U=(5, 5))
        S = LevelSet(((4, 1), (9, 2)))
        cat = default_catalog(b, (1, 2))
        v = LINEAR
        m = assemble(v, S, build_tree(v, S), cat)
        z = discrete_growth_table(m)
        for j, (n_j, t_j) in enumerate(S.intervals):
            blk = cat.block(j)
            for n in range(n_j * m.l + 1, (n_j + t_j) * m.l):
                others = sum(
                    i.strand_multiplicity * max(i.spec.increments())
                    for i in m.instances
                    if not i.spec.is_block and m.base(i) <= n
                )
                assert z[n] - z[n - 1] <= b.U[j] * len(blk.components) + others

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from(sorted(TABLES)), st.integers(10, 30))
    def test_equivalent_to_v(self, name, N):
        v = TABLES[name].truncate(N)
        m = build_model(v)
        z = discrete_growth_table(m)
        zl = level_restricted(z, m.l, N)
        assert same_growth_type(v, zl, 64) is not None
        # the n -> n*l bridge itself costs at most A = l
        assert same_growth_type(z, zl, 64).A <= m.l


class TestChooseLevels:
    def test_unit_heights(self):
        v = GrowthFunction.from_function(lambda n: 2 * n + 1, 200)
        S = choose_levels(v, [1] * 10, DEFAULT_BOUNDS)
        assert S.intervals == tuple((2 * 3**j, 1) for j in range(5))
        assert lower_density_profile(S, 200).min_at(200) < Fraction(1, 10)

    def test_single_block(self):
        v = GrowthFunction.from_function(lambda n: 2 * n + 1, 30)
        S = choose_levels(v, [1], DEFAULT_BOUNDS)
        assert S.intervals == ((DEFAULT_BOUNDS.d, 1),)

    def test_growing_heights_need_a_long_horizon(self):
        t = [j + 1 for j in range(10)]
        with pytest.raises(ScheduleNotFound):
            choose_levels(GrowthFunction.from_function(lambda n: 2 * n + 1, 32), t, DEFAULT_BOUNDS)
        S = choose_levels(GrowthFunction.from_function(lambda n: 2 * n + 1, 256), t, DEFAULT_BOUNDS)
        assert all(n >= DEFAULT_BOUNDS.d for n, _ in S.intervals)

    def test_skips_infeasible_levels(self):
        # doubling increments cannot absorb a thin level until the cap
        v = from_increments(lambda n: min(2**n, 64), 60)
        S = choose_levels(v, [1] * 6, DEFAULT_BOUNDS)
        c = v.increments()
        for n, _ in S.intervals:
            assert c[n] <= 2 * c[n - 1] - 1
