import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from swarmclust.core import ContractViolation, Dataset, Rng
from swarmclust.swarm import (
    Particle,
    PsoConfig,
    decode,
    encode,
    exponential_literal,
    exponential_normalized,
    inertia_weight,
    init_swarm,
    linear,
    restrict_boundary,
    step,
    update_position,
    update_velocity,
)

from oracles import StubStream, pso_replay


class ConstantStream:
    def __init__(self, value):
        self.value = value

    def random(self, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)


def quadratic_fitness(target):
    def fitness(pos):
        return float(np.sum((pos - target) ** 2))

    return fitness


class TestEncodeDecode:
    def test_k1_identity(self):
        c = np.array([[1.0, 2.0, 3.0]])
        assert np.array_equal(encode(c), [1.0, 2.0, 3.0])

    def test_row_major_round_trip(self):
        c = np.array([[1.0, 2.0], [3.0, 4.0]])
        pos = encode(c)
        assert np.array_equal(pos, [1.0, 2.0, 3.0, 4.0])
        assert np.array_equal(decode(pos, 2, 2), c)

    @given(hnp.arrays(np.float64, (3, 4), elements=st.floats(-1e12, 1e12, allow_nan=False)))
    def test_round_trip_bit_exact(self, c):
        assert np.array_equal(decode(encode(c), 3, 4), c)

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            decode(np.zeros(5), 2, 3)


class TestInertiaWeight:
    def test_literal_at_zero_is_maxw(self):
        cfg = PsoConfig(inertia=exponential_literal(0.9))
        assert inertia_weight(cfg, 0) == 0.9

    def test_literal_at_one(self):
        cfg = PsoConfig(inertia=exponential_literal(0.9))
        assert inertia_weight(cfg, 1) == pytest.approx(0.9 * math.exp(-1), rel=1e-12)
        assert inertia_weight(cfg, 1) == pytest.approx(0.3311, abs=1e-4)

    def test_linear_endpoint(self):
        cfg = PsoConfig(inertia=linear(0.9, 0.4), max_iter=50)
        assert inertia_weight(cfg, 50) == pytest.approx(0.4)

    @pytest.mark.parametrize("sched", [linear(0.9, 0.4), exponential_literal(0.9),
                                       exponential_normalized(0.9)])
    def test_schedule_bounds(self, sched):
        cfg = PsoConfig(inertia=sched, max_iter=40)
        for it in range(41):
            w = inertia_weight(cfg, it)
            assert 0.0 <= w <= 0.9


class TestVelocityAndPosition:
    def test_all_terms_vanish(self):
        p = Particle(np.array([1.0]), np.array([2.0]), np.array([5.0]), 0.0)
        cfg = PsoConfig(c1=0.0, c2=0.0, v_max_fraction=None)
        vel = update_velocity(p, np.array([7.0]), 0.0, cfg, ConstantStream(0.5))
        assert np.array_equal(vel, [0.0])

    def test_pure_inertia_when_at_both_bests(self):
        x = np.array([2.0, -1.0])
        p = Particle(x.copy(), np.array([0.5, 0.5]), x.copy(), 0.0)
        cfg = PsoConfig(v_max_fraction=None)
        vel = update_velocity(p, x.copy(), 0.9, cfg, ConstantStream(0.3))
        assert np.allclose(vel, 0.9 * np.array([0.5, 0.5]))

    def test_hand_evaluated_1d_update(self):
        # v=0.5, x=1, pbest=2, gbest=3, w=0.9, c1=c2=2, rand=0.5
        p = Particle(np.array([1.0]), np.array([0.5]), np.array([2.0]), 0.0)
        cfg = PsoConfig(c1=2.0, c2=2.0, v_max_fraction=None)
        vel = update_velocity(p, np.array([3.0]), 0.9, cfg, ConstantStream(0.5))
        assert vel[0] == pytest.approx(3.45, rel=1e-15)
        p.velocity = vel
        assert update_position(p)[0] == pytest.approx(4.45, rel=1e-15)

    def test_v_max_clamp(self):
        p = Particle(np.array([0.0]), np.array([100.0]), np.array([0.0]), 0.0)
        cfg = PsoConfig(v_max_fraction=0.5)
        vel = update_velocity(p, np.array([0.0]), 1.0, cfg, ConstantStream(0.0),
                              v_max=np.array([2.0]))
        assert vel[0] == 2.0


class TestRestrictBoundary:
    lower = np.array([0.0])
    upper = np.array([1.0])

    def test_inside_unchanged(self):
        pos = restrict_boundary(np.array([0.4]), np.array([0.2]), self.lower, self.upper)
        assert pos[0] == 0.4

    def test_overshoot_reverts(self):
        # pre-update 0.8, velocity 0.5 -> 1.3 is out -> back to 0.8
        pos = restrict_boundary(np.array([1.3]), np.array([0.5]), self.lower, self.upper)
        assert pos[0] == pytest.approx(0.8)

    def test_exactly_on_bound_kept(self):
        pos = restrict_boundary(np.array([1.0]), np.array([0.5]), self.lower, self.upper)
        assert pos[0] == 1.0

    def test_out_of_bounds_start_clamped(self):
        # position 2.0 with velocity 0.5 reverts to 1.5, still out -> clamp
        pos = restrict_boundary(np.array([2.0]), np.array([0.5]), self.lower, self.upper)
        assert pos[0] == 1.0

    def test_per_component(self):
        pos = restrict_boundary(
            np.array([0.5, 1.2]), np.array([0.1, 0.4]), np.zeros(2), np.ones(2)
        )
        assert np.allclose(pos, [0.5, 0.8])


def tiny_dataset():
    return Dataset(points=np.array([[0.0, 0.0], [1.0, 1.0], [4.0, 0.0], [5.0, 1.0]]))


class TestInitSwarm:
    def test_seed_particle_exact(self):
        ds = tiny_dataset()
        seeds = np.array([[0.5, 0.5], [4.5, 0.5]])
        cfg = PsoConfig(swarm_size=4)
        swarm = init_swarm(seeds, 2, ds, cfg, Rng(0), quadratic_fitness(0.0))
        assert np.array_equal(decode(swarm.particles[0].position, 2, 2), seeds)

    def test_positions_within_bounds(self):
        ds = tiny_dataset()
        cfg = PsoConfig(swarm_size=8)
        for seeds in (None, ds.points[:2].copy()):
            swarm = init_swarm(seeds, 2, ds, cfg, Rng(3), quadratic_fitness(1.0))
            for p in swarm.particles:
                assert np.all(p.position >= swarm.lower)
                assert np.all(p.position <= swarm.upper)
                assert np.array_equal(p.velocity, np.zeros(4))
                assert np.array_equal(p.pbest_position, p.position)

    def test_equal_seeds_identical_swarms(self):
        ds = tiny_dataset()
        cfg = PsoConfig(swarm_size=5)
        a = init_swarm(None, 2, ds, cfg, Rng(42), quadratic_fitness(0.0))
        b = init_swarm(None, 2, ds, cfg, Rng(42), quadratic_fitness(0.0))
        for pa, pb in zip(a.particles, b.particles):
            assert np.array_equal(pa.position, pb.position)
        assert a.gbest_fitness == b.gbest_fitness

    def test_swarm_size_floor_enforced(self):
        with pytest.raises(ContractViolation):
            PsoConfig(swarm_size=1)

    def test_gbest_is_min_pbest(self):
        ds = tiny_dataset()
        swarm = init_swarm(None, 2, ds, PsoConfig(swarm_size=6), Rng(7),
                           quadratic_fitness(0.5))
        assert swarm.gbest_fitness == min(p.pbest_fitness for p in swarm.particles)


class TestStep:
    def test_fixed_point_when_converged(self):
        ds = tiny_dataset()
        target = np.array([0.5, 0.5, 4.5, 0.5])
        fitness = quadratic_fitness(target)
        cfg = PsoConfig(swarm_size=3, c1=1.0, c2=1.0)
        swarm = init_swarm(decode(target, 2, 2), 2, ds, cfg, Rng(1), fitness)
        # park every particle exactly at the optimum with zero velocity
        for p in swarm.particles:
            p.position = target.copy()
            p.pbest_position = target.copy()
            p.pbest_fitness = fitness(target)
        swarm.gbest_position = target.copy()
        swarm.gbest_fitness = fitness(target)
        step(swarm, fitness, cfg, Rng(2))
        assert swarm.gbest_fitness == fitness(target)
        assert np.array_equal(swarm.gbest_position, target)

    def test_gbest_never_worsens(self):
        ds = tiny_dataset()
        fitness = quadratic_fitness(2.0)
        cfg = PsoConfig(swarm_size=4, boundary="none")
        swarm = init_swarm(None, 2, ds, cfg, Rng(5), fitness)
        rng = Rng(6)
        prev = swarm.gbest_fitness
        for _ in range(30):
            step(swarm, fitness, cfg, rng)
            assert swarm.gbest_fitness <= prev
            prev = swarm.gbest_fitness

    def test_pbest_consistency(self):
        ds = tiny_dataset()
        fitness = quadratic_fitness(1.0)
        cfg = PsoConfig(swarm_size=4)
        swarm = init_swarm(None, 2, ds, cfg, Rng(9), fitness)
        rng = Rng(10)
        for _ in range(10):
            step(swarm, fitness, cfg, rng)
            for p in swarm.particles:
                assert p.pbest_fitness == fitness(p.pbest_position)

    def test_nan_fitness_aborts(self):
        ds = tiny_dataset()
        cfg = PsoConfig(swarm_size=2)
        swarm = init_swarm(None, 2, ds, cfg, Rng(1), quadratic_fitness(0.0))
        with pytest.raises(RuntimeError, match="NaN"):
            step(swarm, lambda pos: float("nan"), cfg, Rng(2))

    def test_boundary_containment_under_steps(self):
        ds = tiny_dataset()
        fitness = quadratic_fitness(0.0)
        cfg = PsoConfig(swarm_size=5, boundary="restricted")
        swarm = init_swarm(None, 2, ds, cfg, Rng(21), fitness)
        rng = Rng(22)
        for _ in range(50):
            step(swarm, fitness, cfg, rng)
            for p in swarm.particles:
                assert np.all(p.position >= swarm.lower)
                assert np.all(p.position <= swarm.upper)


class TestLockstepOracle:
    @pytest.mark.parametrize("boundary,seeded,sched", [
        ("restricted", False, ("exponential_normalized", 0.9)),
        ("none", False, ("linear", 0.9, 0.4)),
        ("restricted", True, ("exponential_literal", 0.9)),
        ("none", True, ("exponential_normalized", 0.9)),
    ])
    def test_ten_iterations_match_reference(self, boundary, seeded, sched):
        rng = Rng(hash((boundary, seeded, sched[0])) & 0xFFFF)
        pts = rng.uniform(-2, 3, size=(8, 2))
        ds = Dataset(points=pts)
        k = 2
        seeds = pts[:k].copy() if seeded else None
        if sched[0] == "linear":
            inertia = linear(sched[1], sched[2])
        elif sched[0] == "exponential_literal":
            inertia = exponential_literal(sched[1])
        else:
            inertia = exponential_normalized(sched[1])
        cfg = PsoConfig(c1=1.6, c2=1.8, inertia=inertia, max_iter=10,
                        swarm_size=5, boundary=boundary, v_max_fraction=0.7)

        from swarmclust.pipelines import _fitness_for

        fitness = _fitness_for(ds, k)
        stub_engine = StubStream(2024)
        swarm = init_swarm(seeds, k, ds, cfg, stub_engine, fitness)
        trace = [swarm.gbest_fitness]
        for _ in range(10):
            step(swarm, fitness, cfg, stub_engine)
            trace.append(swarm.gbest_fitness)

        ref_trace, ref_gbest = pso_replay(
            pts.tolist(), k, seeds.tolist() if seeded else None, StubStream(2024),
            c1=1.6, c2=1.8, inertia=sched, max_iter=10, swarm_size=5,
            boundary=boundary, v_max_fraction=0.7, iters=10,
        )
        assert trace == pytest.approx(ref_trace, rel=1e-12)
        assert swarm.gbest_position == pytest.approx(ref_gbest, rel=1e-12)
