import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazecap import attention as att
from gazecap import tensor as T
from gazecap.tensor import Tensor


def make_params(variant, D=3, H=2, P=2, seed=0, rng=None, tie=False):
    p = att.init_attention(variant, D, H, P, seed, tie_gaze_weights=tie)
    if rng is not None:
        for t in p.named().values():
            t.data[...] = rng.normal(size=t.shape)
    return p


# scalar-loop oracles ----------------------------------------------------------


def project_oracle(a, h, Ua, Uh, b):
    L, D = a.shape
    P = Ua.shape[1]
    out = np.zeros((L, P))
    for i in range(L):
        for k in range(P):
            s = b[k]
            for d in range(D):
                s += a[i, d] * Ua[d, k]
            for j in range(len(h)):
                s += h[j] * Uh[j, k]
            out[i, k] = math.tanh(s)
    return out


def dot(u, v):
    s = 0.0
    for x, y in zip(u, v):
        s += x * y
    return s


def energy_oracle(p, params, g=None):
    c = float(params.c_att.data)
    out = []
    for i in range(p.shape[0]):
        if params.variant == "machine":
            out.append(dot(params.w_att.data, p[i]) + c)
        elif params.variant == "gaze_only":
            out.append(g[i] * dot(params.w_pos.data, p[i]) + c)
        else:
            out.append(g[i] * dot(params.w_pos.data, p[i]) + (1 - g[i]) * dot(params.w_neg.data, p[i]) + c)
    return np.array(out)


def context_oracle(alpha, a):
    L, D = a.shape
    return np.array([sum(alpha[i] * a[i, d] for i in range(L)) for d in range(D)])


# project ------------------------------------------------------------------------


def test_project_zero_inputs():
    p = make_params("machine", D=3, H=2, P=2)
    out = att.project(Tensor(np.zeros((1, 4, 3))), Tensor(np.zeros((1, 2))), p)
    np.testing.assert_array_equal(out.data, 0.0)


def test_project_zero_Uh_ignores_hidden(rng):
    p = make_params("machine", rng=rng)
    p.U_h.data[...] = 0.0
    a = Tensor(rng.normal(size=(1, 4, 3)))
    o1 = att.project(a, Tensor(rng.normal(size=(1, 2))), p).data
    o2 = att.project(a, Tensor(rng.normal(size=(1, 2))), p).data
    np.testing.assert_array_equal(o1, o2)


def test_project_matches_scalar_oracle(rng):
    p = make_params("machine", D=3, H=2, P=2, rng=rng)
    a = rng.normal(size=(2, 5, 3))
    h = rng.normal(size=(2, 2))
    out = att.project(Tensor(a), Tensor(h), p).data
    for b in range(2):
        ref = project_oracle(a[b], h[b], p.U_a.data, p.U_h.data, p.b_p.data)
        np.testing.assert_allclose(out[b], ref, atol=1e-12, rtol=0)


def test_project_dim_mismatch():
    p = make_params("machine", D=3, H=2)
    with pytest.raises(T.ShapeError):
        att.project(Tensor(np.zeros((1, 4, 5))), Tensor(np.zeros((1, 2))), p)


# energies -----------------------------------------------------------------------


def test_machine_zero_weight_gives_uniform():
    p = make_params("machine", rng=np.random.default_rng(2))
    p.w_att.data[...] = 0.0
    pp = Tensor(np.random.default_rng(3).normal(size=(1, 6, 2)))
    e = att.energy_machine(pp, p)
    np.testing.assert_allclose(e.data, float(p.c_att.data), atol=0)
    np.testing.assert_allclose(att.attend(e).data, 1 / 6, atol=1e-15)


def test_machine_identical_rows_uniform(rng):
    p = make_params("machine", rng=rng)
    row = rng.normal(size=2)
    alpha = att.attend(att.energy_machine(Tensor(np.tile(row, (1, 5, 1))), p)).data
    np.testing.assert_allclose(alpha, 0.2, atol=1e-15)


@pytest.mark.parametrize("variant", ["machine", "gaze_only", "split"])
def test_energy_matches_scalar_oracle(variant, rng):
    p = make_params(variant, rng=rng)
    pp = rng.normal(size=(1, 5, 2))
    g = rng.uniform(0.01, 0.99, size=(1, 5))
    e = att.energy(Tensor(pp), g if variant != "machine" else None, p).data
    np.testing.assert_allclose(e[0], energy_oracle(pp[0], p, g[0]), atol=1e-12, rtol=0)


def test_split_saturated_gate_equals_machine_with_wpos(rng):
    p = make_params("split", rng=rng)
    pp = Tensor(rng.normal(size=(1, 5, 2)))
    e = att.energy_split(pp, np.ones((1, 5)), p)
    np.testing.assert_allclose(e.data, att.energy_machine(pp, p, w=p.w_pos).data, atol=1e-15)


def test_split_closed_gate_equals_machine_with_wneg(rng):
    p = make_params("split", rng=rng)
    pp = Tensor(rng.normal(size=(1, 5, 2)))
    e = att.energy_split(pp, np.zeros((1, 5)), p)
    np.testing.assert_allclose(e.data, att.energy_machine(pp, p, w=p.w_neg).data, atol=1e-15)


def test_gaze_only_closed_gate_uniform(rng):
    p = make_params("gaze_only", rng=rng)
    e = att.energy_split(Tensor(rng.normal(size=(1, 7, 2))), np.zeros((1, 7)), p)
    np.testing.assert_array_equal(e.data, float(p.c_att.data))
    np.testing.assert_allclose(att.attend(e).data, 1 / 7, atol=1e-12)


def test_split_equal_weights_collapse(rng):
    p = make_params("split", rng=rng)
    p.w_neg.data[...] = p.w_pos.data
    pp = Tensor(rng.normal(size=(1, 5, 2)))
    for g in (rng.uniform(size=(1, 5)), np.zeros((1, 5)), np.ones((1, 5))):
        np.testing.assert_allclose(att.energy_split(pp, g, p).data,
                                   att.energy_machine(pp, p, w=p.w_pos).data, atol=1e-14)


@pytest.mark.parametrize("bad", [-0.1, 1.5, np.nan])
def test_gaze_out_of_range_rejected(bad):
    p = make_params("split")
    g = np.full((1, 3), 0.5)
    g[0, 1] = bad
    with pytest.raises(ValueError):
        att.energy_split(Tensor(np.zeros((1, 3, 2))), g, p)


def test_machine_needs_no_gaze_but_gaze_variants_do():
    p = make_params("split")
    with pytest.raises(ValueError, match="gaze"):
        att.energy(Tensor(np.zeros((1, 3, 2))), None, p)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_gate_monotonicity(seed, g1, g2):
    rng = np.random.default_rng(seed)
    p = make_params("split", rng=rng)
    pp = rng.normal(size=(1, 1, 2))
    lo, hi = sorted((g1, g2))
    if hi - lo < 1e-6:
        return
    e_lo = att.energy_split(Tensor(pp), np.array([[lo]]), p).data[0, 0]
    e_hi = att.energy_split(Tensor(pp), np.array([[hi]]), p).data[0, 0]
    diff = dot(p.w_pos.data, pp[0, 0]) - dot(p.w_neg.data, pp[0, 0])
    if diff > 1e-9:
        assert e_hi > e_lo
    elif diff < -1e-9:
        assert e_hi < e_lo


# attend / context ----------------------------------------------------------------


def test_attend_examples():
    np.testing.assert_allclose(att.attend(Tensor([[0.0, math.log(2)]])).data, [[1 / 3, 2 / 3]], atol=1e-15)
    np.testing.assert_allclose(att.attend(Tensor([[4.0] * 4])).data, 0.25, atol=1e-15)
    e = np.array([[0.3, -1.2, 2.0]])
    np.testing.assert_allclose(att.attend(Tensor(e + 17.5)).data, att.attend(Tensor(e)).data, atol=1e-15)


def test_context_one_hot_selects(rng):
    a = rng.normal(size=(1, 4, 3))
    alpha = np.zeros((1, 4))
    alpha[0, 2] = 1.0
    np.testing.assert_array_equal(att.context(Tensor(alpha), Tensor(a)).data[0], a[0, 2])


def test_context_identical_features(rng):
    v = rng.normal(size=3)
    a = np.tile(v, (1, 4, 1))
    alpha = rng.dirichlet(np.ones(4))[None]
    np.testing.assert_allclose(att.context(Tensor(alpha), Tensor(a)).data[0], v, atol=1e-15)


def test_context_matches_scalar_oracle(rng):
    a = rng.normal(size=(1, 4, 3))
    alpha = rng.dirichlet(np.ones(4))[None]
    np.testing.assert_allclose(att.context(Tensor(alpha), Tensor(a)).data[0], context_oracle(alpha[0], a[0]),
                               atol=1e-12, rtol=0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8), st.sampled_from(["machine", "gaze_only", "split"]))
def test_alpha_normalised_and_context_in_hull(seed, L, variant):
    rng = np.random.default_rng(seed)
    p = make_params(variant, rng=rng)
    a = rng.normal(size=(1, L, 3)) * 3
    h = rng.normal(size=(1, 2))
    g = rng.uniform(size=(1, L))
    alpha = att.attend(att.energy(att.project(Tensor(a), Tensor(h), p), g, p))
    assert abs(alpha.data.sum() - 1.0) <= 1e-9
    z = att.context(alpha, Tensor(a)).data[0]
    assert np.all(z >= a[0].min(axis=0) - 1e-12) and np.all(z <= a[0].max(axis=0) + 1e-12)


def test_tied_split_shares_one_tensor():
    p = make_params("split", tie=True)
    assert p.tied and p.w_pos is p.w_neg
    assert "att_wneg" not in p.named()


def test_split_init_matches_machine_init():
    m = make_params("machine", seed=5)
    s = make_params("split", seed=5)
    np.testing.assert_array_equal(m.w_att.data, s.w_pos.data)
    np.testing.assert_array_equal(m.w_att.data, s.w_neg.data)
    np.testing.assert_array_equal(m.U_a.data, s.U_a.data)
