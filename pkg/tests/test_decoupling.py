import numpy as np
import pytest

from phode.core import LinearPHSystem, validate_structure
from phode.coupling import (CouplingSpec, LinearPortRelation, build_phdae,
                            condense_skew, eliminate_ports)
from phode.decoupling import (LinearTransform, Partition, VerificationFailure,
                              apply_transform, decouple_auto,
                              decouple_with_ports, partition_blocks)
from phode.integrate import implicit_midpoint
from phode.models import two_mass, two_mass_alt_ports

from util import random_linear_ph


class TestPartition:
    def test_sizes_validated(self):
        with pytest.raises(ValueError):
            Partition((2, 0))
        with pytest.raises(ValueError):
            Partition(())

    def test_ranges_disjoint_exhaustive(self):
        p = Partition((3, 2))
        assert p.n == 5 and p.s == 2
        assert p.ranges == (slice(0, 3), slice(3, 5))


class TestApplyTransform:
    def test_identity(self):
        sys = two_mass()
        out = apply_transform(sys, np.eye(5))
        for a in ("E", "J", "R", "B", "L"):
            assert np.allclose(getattr(out, a), getattr(sys, a), atol=1e-15)

    def test_permutation_reorders_blocks(self):
        sys = two_mass()
        perm, part, _, _ = two_mass_alt_ports()
        w = apply_transform(sys, perm)
        view = partition_blocks(w, part)
        # momenta block (components 1, 4): no internal structure, both dampers
        assert np.array_equal(view.J_diag[0], np.zeros((2, 2)))
        assert np.allclose(view.R_diag[0], np.diag([0.1, 0.1]))
        # spring block (components 2, 3, 5): lossless and uncoupled internally
        assert np.array_equal(view.J_diag[1], np.zeros((3, 3)))
        assert np.array_equal(view.R_diag[1], np.zeros((3, 3)))
        assert view.q_separable and view.e_blockdiag
        assert validate_structure(w, tol=1e-12).passed

    def test_energy_equivalence_under_scaling(self):
        # dual-simulation oracle: H along matched trajectories agrees
        sys = two_mass()
        T = np.diag([2.0, 1.0, 1.0, 1.0, 1.0])
        out = apply_transform(sys, T)
        assert validate_structure(out, tol=1e-10).passed
        x0 = np.array([0.8, -0.3, 0.5, 0.1, -0.6])
        a = implicit_midpoint(sys, x0=x0, t0=0.0, t1=2.0, dt=0.01)
        b = implicit_midpoint(out, x0=T @ x0, t0=0.0, t1=2.0, dt=0.01)
        assert np.max(np.abs(a.H - b.H)) <= 1e-9

    def test_singular_transform_rejected(self):
        with pytest.raises(ValueError):
            LinearTransform(np.zeros((3, 3)))


class TestPartitionBlocks:
    def test_two_mass_printed_blocks(self):
        sys = two_mass()
        view = partition_blocks(sys, (3, 2))
        assert np.array_equal(view.J_diag[0],
                              [[0., -1., -1.], [1., 0., 0.], [1., 0., 0.]])
        assert np.array_equal(view.J_diag[1], [[0., -1.], [1., 0.]])
        assert np.allclose(view.R_diag[0], np.diag([0.1, 0., 0.]))
        assert np.allclose(view.R_diag[1], np.diag([0.1, 0.]))
        assert np.array_equal(view.J_block(0, 1),
                              [[0., 0.], [0., 0.], [-1., 0.]])
        assert view.q_separable
        # diag + offdiag reassembles exactly
        rebuilt = view.J_offdiag.copy()
        for i, r in enumerate(view.partition.ranges):
            rebuilt[r, r] = view.J_diag[i]
        assert np.array_equal(rebuilt, sys.J)

    def test_whole_partition(self):
        sys = two_mass()
        view = partition_blocks(sys, (5,))
        assert not np.any(view.J_offdiag)
        assert np.array_equal(view.J_diag[0], sys.J)

    def test_bad_partition_sum(self):
        with pytest.raises(Exception):
            partition_blocks(two_mass(), (3, 3))


class TestDecoupleAuto:
    def test_two_mass_case1_printed_coupling(self):
        sys = two_mass()
        net = decouple_auto(sys, (3, 2))
        assert isinstance(net.coupling, CouplingSpec)
        C_expected = -np.array([
            [0., 0., 0., 0., 0.],
            [0., 0., 0., 0., 0.],
            [0., 0., 0., -1., 0.],
            [0., 0., 1., 0., 0.],
            [0., 0., 0., 0., 0.],
        ])
        assert np.array_equal(net.coupling.C, C_expected)
        assert net.coupling.is_skew
        mono = condense_skew(net)
        assert np.array_equal(mono.J, sys.J)
        assert np.array_equal(mono.R, sys.R)

    def test_case2_symmetric_offdiagonal(self):
        sys = LinearPHSystem(E=np.eye(2), J=np.zeros((2, 2)),
                             R=[[1., 0.5], [0.5, 1.]],
                             B=np.zeros((2, 0)), L=np.eye(2))
        net = decouple_auto(sys, (1, 1))
        assert isinstance(net.coupling, LinearPortRelation)
        assert np.allclose(net.coupling.N, [[0., 0.5], [0.5, 0.]])
        mono = eliminate_ports(build_phdae(net))
        assert np.allclose(mono.R, sys.R, atol=1e-14)
        assert np.allclose(mono.J, sys.J, atol=1e-14)

    def test_blockdiagonal_system_has_zero_coupling(self):
        import scipy.linalg
        rng = np.random.default_rng(2)
        a = random_linear_ph(rng, n=2, m=0)
        b = random_linear_ph(rng, n=3, m=0)
        sys = LinearPHSystem(E=np.eye(5),
                             J=scipy.linalg.block_diag(a.J, b.J),
                             R=scipy.linalg.block_diag(a.R, b.R),
                             B=np.zeros((5, 0)),
                             L=scipy.linalg.block_diag(a.L, b.L))
        net = decouple_auto(sys, (2, 3))
        assert not np.any(net.coupling.C)

    def test_nonseparable_rejected(self):
        rng = np.random.default_rng(4)
        sys = random_linear_ph(rng, n=4, m=0)  # dense Q
        with pytest.raises(ValueError, match="separable"):
            decouple_auto(sys, (2, 2))

    def test_case1_coupling_is_exactly_skew(self):
        sys = two_mass()
        net = decouple_auto(sys, (3, 2))
        C = net.coupling.C
        assert np.array_equal(C, -C.T)

    def test_subsystems_valid(self):
        net = decouple_auto(two_mass(), (3, 2))
        for sub in net.subsystems:
            assert validate_structure(sub, tol=1e-12).passed

    def test_roundtrip_random_blockdiag_systems(self):
        import scipy.linalg
        rng = np.random.default_rng(77)
        for _ in range(20):
            sizes = [int(rng.integers(1, 4)) for _ in range(int(rng.integers(2, 4)))]
            subs = [random_linear_ph(rng, n=ni, m=0, implicit=True) for ni in sizes]
            n = sum(sizes)
            # dense skew coupling in J across the blocks
            S = rng.standard_normal((n, n))
            S = S - S.T
            offs = np.cumsum([0] + sizes)
            for i in range(len(sizes)):
                S[offs[i]:offs[i + 1], offs[i]:offs[i + 1]] = 0.0
            sys = LinearPHSystem(
                E=scipy.linalg.block_diag(*[s.E for s in subs]),
                J=scipy.linalg.block_diag(*[s.J for s in subs]) + S,
                R=scipy.linalg.block_diag(*[s.R for s in subs]),
                B=np.zeros((n, 0)),
                L=scipy.linalg.block_diag(*[s.L for s in subs]))
            net = decouple_auto(sys, sizes)
            mono = condense_skew(net)
            for a in ("E", "J", "R", "Q"):
                assert np.max(np.abs(getattr(mono, a) - getattr(sys, a))) <= 1e-14

    def test_transform_then_decouple_consistency(self):
        sys = two_mass()
        perm, part, _, _ = two_mass_alt_ports()
        w = apply_transform(sys, perm)
        net = decouple_auto(w, part)
        view = partition_blocks(w, part)
        for i in range(2):
            assert np.allclose(net.subsystems[i].J, view.J_diag[i], atol=1e-15)
            assert np.allclose(net.subsystems[i].R, view.R_diag[i], atol=1e-15)
        assert np.allclose(net.coupling.C, -view.J_offdiag, atol=1e-15)


class TestDecoupleWithPorts:
    def test_two_mass_variant_b_verifies(self):
        sys = two_mass()
        b1 = np.array([[0.], [0.], [1.]])
        b2 = np.array([[-1.], [0.]])
        net = decouple_with_ports(sys, (3, 2), [b1, b2], {(0, 1): [[-1.]]})
        assert not isinstance(net, VerificationFailure)
        # printed check: B1 C12 B2^T = [[0,0],[0,0],[1,0]] = -J12
        assert np.array_equal(b1 @ np.array([[-1.]]) @ b2.T,
                              [[0., 0.], [0., 0.], [1., 0.]])
        mono = condense_skew(net)
        assert np.array_equal(mono.J, sys.J)

    def test_wrong_port_fails(self):
        sys = two_mass()
        out = decouple_with_ports(sys, (3, 2),
                                  [np.array([[1.], [0.], [0.]]),
                                   np.array([[-1.], [0.]])],
                                  {(0, 1): [[-1.]]})
        assert isinstance(out, VerificationFailure)
        assert out.pair == (0, 1)
        assert np.any(out.residual)

    def test_identity_fallback_always_verifies(self):
        rng = np.random.default_rng(13)
        sys = two_mass()
        view = partition_blocks(sys, (3, 2))
        c12 = -(view.J_block(0, 1) - view.R_block(0, 1))
        net = decouple_with_ports(sys, (3, 2), [np.eye(3), np.eye(2)],
                                  {(0, 1): c12})
        assert not isinstance(net, VerificationFailure)
        mono = condense_skew(net)
        assert np.array_equal(mono.J, sys.J)

    def test_documented_alt_splitting_fails_with_exact_residual(self):
        sys = two_mass()
        perm, part, ports, blocks = two_mass_alt_ports()
        w = apply_transform(sys, perm)
        out = decouple_with_ports(w, part, ports, blocks)
        assert isinstance(out, VerificationFailure)
        assert out.pair == (0, 1)
        assert np.array_equal(out.residual, [[0., 0., 0.], [-1., 1., 0.]])

    def test_port_dimension_mismatch(self):
        sys = two_mass()
        with pytest.raises(Exception):
            decouple_with_ports(sys, (3, 2), [np.eye(2), np.eye(2)], {})
