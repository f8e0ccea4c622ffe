import numpy as np
import pytest

from qcorr.correlation import (
    analyze,
    correlation_matrix,
    ensemble_rank_theorem_check,
    is_product,
    reduce_dependent_ensemble,
    witness_report,
)
from qcorr.discord import discord
from qcorr.linalg import gellmann_basis, max_entry_norm, numerical_rank, random_orthogonal, rotated_basis
from qcorr.states import (
    DensityMatrix,
    ProductEnsemble,
    assemble,
    product_state,
    random_density,
    random_ensemble,
    random_state,
    rho_c,
    rho_l,
    rho_l_ensemble,
    schmidt_rank2_pure,
    werner_state,
)


def test_product_state_rank_one():
    rng = np.random.default_rng(0)
    rho = product_state(random_density(3, rng), random_density(2, rng))
    assert numerical_rank(correlation_matrix(rho)) == 1


def test_maximally_mixed_single_entry():
    r = correlation_matrix(DensityMatrix(2, 3, np.eye(6) / 6))
    nz = np.argwhere(np.abs(r) > 1e-14)
    assert nz.tolist() == [[0, 0]]
    assert np.isclose(r[0, 0], 1 / np.sqrt(6))


def test_werner_coefficients_by_hand():
    # rho_W = 1/4 (II + z(XX - YY + ZZ)); in the unnormalized Pauli basis the
    # coefficients are 1/4 and z/4 = 1/12. The orthonormal basis (sigma/sqrt2)
    # multiplies every coefficient by 2.
    r = correlation_matrix(werner_state(1 / 3)) / 2
    expected = np.diag([1 / 4, 1 / 12, -1 / 12, 1 / 12])
    assert np.allclose(r, expected, atol=1e-15)


def test_named_state_ranks():
    assert analyze(werner_state(1 / 3)).rank_l == 4
    assert analyze(rho_l()).rank_l == 2
    assert analyze(rho_c()).rank_l == 2
    assert analyze(schmidt_rank2_pure(5)).rank_l == 4


def test_diagonal_representation_reconstructs():
    rng = np.random.default_rng(1)
    for da, db in [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4)]:
        for _ in range(10):
            rho = random_state(da, db, rng)
            an = analyze(rho)
            assert max_entry_norm(an.reconstruct() - rho.matrix) <= 1e-9
            for ops in (an.ops_a, an.ops_b):
                gram = np.einsum("iab,jba->ij", ops, ops)
                assert np.allclose(gram, np.eye(an.rank_l), atol=1e-9)
                assert np.allclose(ops, np.conj(np.swapaxes(ops, 1, 2)), atol=1e-12)


def test_witness_examples():
    c = witness_report(rho_c())
    assert (c.witness_fired, c.zero_discord_a, c.zero_discord_b) == (False, True, True)
    l = witness_report(rho_l())
    assert (l.witness_fired, l.zero_discord_a, l.zero_discord_b) == (False, False, True)
    assert witness_report(werner_state(1 / 3)).witness_fired


def test_rho_l_commutators_direct():
    # span{S_i} = span{|0><0|, |+><+|}, span{F_i} = span{|0><0|, |1><1|}
    p0 = np.diag([1.0, 0.0])
    pp = np.full((2, 2), 0.5)
    assert np.max(np.abs(p0 @ pp - pp @ p0)) == 0.5
    an = analyze(rho_l())
    assert np.max(np.abs(an.ops_a[0] @ an.ops_a[1] - an.ops_a[1] @ an.ops_a[0])) > 0.1
    assert np.max(np.abs(an.ops_b[0] @ an.ops_b[1] - an.ops_b[1] @ an.ops_b[0])) < 1e-12


@pytest.mark.parametrize("da,db", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_basis_independence(da, db):
    rng = np.random.default_rng(10 * da + db)
    for _ in range(50):
        rho = random_state(da, db, rng) if rng.random() < 0.5 else assemble(
            random_ensemble(da, db, int(rng.integers(1, 4)), rng)
        )
        ba = rotated_basis(gellmann_basis(da), random_orthogonal(da * da, rng))
        bb = rotated_basis(gellmann_basis(db), random_orthogonal(db * db, rng))
        assert analyze(rho).rank_l == analyze(rho, basis_a=ba, basis_b=bb).rank_l


def test_rank_one_iff_product():
    rng = np.random.default_rng(11)
    for _ in range(30):
        prod = product_state(random_density(2, rng), random_density(3, rng))
        assert analyze(prod).rank_l == 1 and is_product(prod)
        mixed = random_state(2, 3, rng)
        assert analyze(mixed).rank_l > 1 and not is_product(mixed)


def test_witness_soundness_random_states():
    rng = np.random.default_rng(12)
    for _ in range(40):
        rho = random_state(2, 2, rng)
        rep = witness_report(rho)
        if rep.witness_fired:
            assert discord(rho, "A").value > 1e-6


def test_commutator_consistency_one_way():
    rng = np.random.default_rng(13)
    cases = [rho_c(), rho_l(), werner_state(1 / 3)]
    cases += [assemble(random_ensemble(2, 2, 2, rng)) for _ in range(10)]
    for rho in cases:
        rep = witness_report(rho)
        d = discord(rho, "A").value
        if rep.zero_discord_a:
            assert d <= 1e-6
        elif rep.max_commutator_a >= 1e-3:
            assert d >= 1e-8


def test_ensemble_theorem_rho_l():
    chk = ensemble_rank_theorem_check(rho_l_ensemble())
    assert chk.independent_a and chk.independent_b
    assert chk.measured_l == chk.predicted_l == 2


def test_ensemble_theorem_collapse():
    rng = np.random.default_rng(3)
    a = random_density(2, rng)
    ens = ProductEnsemble([0.4, 0.6], [a, a], [random_density(2, rng), random_density(2, rng)])
    chk = ensemble_rank_theorem_check(ens)
    assert not chk.independent_a and chk.measured_l == 1 and chk.consistent


def _dependent_triple(rng, x=(0.5, 0.5), dim=3):
    a1, a2 = random_density(dim, rng), random_density(dim, rng)
    a3 = x[0] * a1 + x[1] * a2
    b = [random_density(dim, rng) for _ in range(3)]
    w = rng.dirichlet(np.ones(3))
    return ProductEnsemble(w, [a1, a2, a3], b)


def test_ensemble_theorem_dependent_triple():
    rng = np.random.default_rng(4)
    ens = _dependent_triple(rng)
    chk = ensemble_rank_theorem_check(ens)
    assert chk.measured_l == 2 and chk.predicted_l == 2 and not chk.independent_a


def test_reduce_dependent_positive():
    rng = np.random.default_rng(5)
    ens = _dependent_triple(rng, (0.3, 0.7))
    red = reduce_dependent_ensemble(ens)
    assert red.all_positive
    assert len(red.terms) == 2
    assert max_entry_norm(red.assemble_matrix() - assemble(ens).matrix) <= 1e-9
    assert abs(sum(c for c, _, _ in red.terms) - 1) < 1e-12
    for c, _, b in red.terms:
        assert np.linalg.eigvalsh(c * b)[0] >= -1e-12


def test_reduce_dependent_two_equal_factors():
    rng = np.random.default_rng(6)
    a = random_density(2, rng)
    b1, b2 = random_density(2, rng), random_density(2, rng)
    ens = ProductEnsemble([0.3, 0.7], [a, a], [b1, b2])
    red = reduce_dependent_ensemble(ens)
    assert len(red.terms) == 1
    assert np.allclose(red.x, [1.0])
    coef, op_a, op_b = red.terms[0]
    assert np.allclose(coef * op_b, 0.3 * b1 + 0.7 * b2)
    assert np.allclose(op_a, a)


def test_reduce_dependent_mixed_signs():
    # b3 = 1.5 b2 - 0.5 b1: a dependence with a negative coefficient, on side B
    rng = np.random.default_rng(8)
    b1 = random_density(3, rng)
    b2 = 0.5 * b1 + 0.5 * random_density(3, rng)
    b3 = 1.5 * b2 - 0.5 * b1
    ens = ProductEnsemble([0.2, 0.3, 0.5], [random_density(3, rng) for _ in range(3)], [b1, b2, b3])
    red = reduce_dependent_ensemble(ens)
    assert red.dependent_side == "B"
    assert max_entry_norm(red.assemble_matrix() - assemble(ens).matrix) <= 1e-9


def test_reduce_needs_dependence():
    with pytest.raises(ValueError, match="no linear dependence"):
        reduce_dependent_ensemble(rho_l_ensemble())


def test_corrupted_input_rejected():
    rho = rho_c()
    bogus = gellmann_basis(2)
    bad = bogus.__class__(2, bogus.elements * 1j)
    with pytest.raises(ValueError, match="imaginary"):
        correlation_matrix(rho, bad, gellmann_basis(2))
