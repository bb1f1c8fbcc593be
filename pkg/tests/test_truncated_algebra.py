import random
import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from oracles import hilbert_series, quadratic_part, tensor_quotient_dims

from modmotive.modular_group import GL2Matrix, GroupWord, act, cusp_classes, presentation, word_problem
from modmotive.truncated_algebra import (
    AlgebraModel,
    ModelMismatchError,
    ResourceCapError,
    build_model,
    comultiply,
    exp,
    filtration_dims,
    in_filtration,
    is_grouplike,
    is_primitive,
    log,
    phi,
    surface_reduction,
    symbol_to_element,
    t_th_root,
)


@pytest.fixture(scope="module")
def m62():
    return build_model(presentation(6), 2)


@pytest.fixture(scope="module")
def m63():
    return build_model(presentation(6), 3)


@pytest.fixture(scope="module")
def m72():
    return build_model(presentation(7), 2)


@pytest.mark.parametrize("n,N", [(6, 4), (7, 3)])
def test_graded_dims_match_tensor_quotient(n, N):
    pres = presentation(n)
    kept, _, relator = surface_reduction(pres)
    q = quadratic_part(relator, kept)
    oracle = tensor_quotient_dims(q, N)
    assert oracle == hilbert_series(pres.genus, N)
    assert build_model(pres, N).graded_dims == oracle


def test_level6_dims_are_m_plus_one():
    pres = presentation(6)
    for N in range(1, 5):
        assert build_model(pres, N).graded_dims == list(range(1, N + 2))


def test_level7_dims():
    assert build_model(presentation(7), 3).graded_dims == [1, 6, 35, 204]


@pytest.mark.parametrize("n", [3, 4, 5])
def test_genus_zero_is_trivial(n):
    m = build_model(presentation(n), 3)
    assert m.dim == 1 and m.graded_dims == [1, 0, 0, 0]


@pytest.mark.parametrize("n", [5, 6])
def test_full_alphabet_agrees(n):
    pres = presentation(n)
    assert build_model(pres, 2, alphabet="full").graded_dims == build_model(pres, 2).graded_dims


def test_resource_cap():
    with pytest.raises(ResourceCapError):
        build_model(presentation(7), 3, monomial_cap=100)


def test_model_json_round_trip(m62):
    back = AlgebraModel.from_json(m62.to_json(), m62.presentation)
    assert back.graded_dims == m62.graded_dims and back.basis == m62.basis
    with pytest.raises(ValueError):
        AlgebraModel.from_json(m62.to_json(), presentation(7))


# --- random elements ------------------------------------------------------


def random_grouplike(model, rng, length=4):
    g = model.one()
    for _ in range(rng.randint(1, length)):
        g = g * model.phi_generator(rng.randrange(model.presentation.free_rank), rng.choice((1, -1)))
    return g


def random_ideal(model, rng):
    vec = [mpq(rng.randint(-3, 3), rng.randint(1, 3)) if model.degree(i) >= 1 else mpq(0) for i in range(model.dim)]
    return model.element(vec)


seeds = st.integers(0, 2 ** 32 - 1)


@given(seeds)
def test_exp_log_inverse(m63, seed):
    rng = random.Random(seed)
    a = random_ideal(m63, rng)
    assert log(exp(a)) == a
    g = m63.one() + random_ideal(m63, rng)
    assert exp(log(g)) == g


@given(seeds)
def test_grouplike_primitive_bijection(m63, seed):
    rng = random.Random(seed)
    g = random_grouplike(m63, rng)
    assert is_grouplike(g)
    assert is_primitive(log(g))
    assert is_grouplike(exp(log(g)))


def test_products_of_primitives_are_not_primitive(m63):
    # x_s = g_s - 1 is not primitive; its logarithm is
    assert not is_primitive(m63.symbol(0))
    x, y = log(m63.one() + m63.symbol(0)), log(m63.one() + m63.symbol(1))
    assert is_primitive(x) and is_primitive(y)
    assert is_primitive(x * y - y * x)
    assert not is_primitive(x * y)


@given(seeds, st.integers(1, 6))
def test_root_uniqueness(m63, seed, t):
    rng = random.Random(seed)
    g = random_grouplike(m63, rng)
    r = t_th_root(g, t)
    assert is_grouplike(r)
    assert r**t == g
    # any grouplike h with h^t = g is the root
    assert t_th_root(g**t, t) == g


def test_root_requires_grouplike(m62):
    with pytest.raises(ValueError):
        t_th_root(m62.one() + m62.one(), 2)


@given(seeds)
def test_phi_is_multiplicative(m62, seed):
    rng = random.Random(seed)
    pres = m62.presentation
    w1 = GroupWord((rng.randrange(pres.free_rank), rng.choice((1, -1))) for _ in range(4))
    w2 = GroupWord((rng.randrange(pres.free_rank), rng.choice((1, -1))) for _ in range(4))
    assert phi(w1 * w2, m62) == phi(w1, m62) * phi(w2, m62)
    assert phi(w1.inverse(), m62) == phi(w1, m62).inverse()


@pytest.mark.parametrize("n", [6, 7])
def test_parabolics_map_to_one(n):
    model = build_model(presentation(n), 2)
    for w in presentation(n).parabolic_words.values():
        assert phi(w, model) == model.one()


def test_comultiply_of_one(m62):
    one = m62.one()
    assert comultiply(one) == {(0, 0): 1}


def test_filtration(m63):
    rng = random.Random(0)
    a, b = random_ideal(m63, rng), random_ideal(m63, rng)
    assert in_filtration(a, 1)
    assert in_filtration(a * b, 2)
    assert in_filtration(a * b * a, 3)
    assert (a * b * a * b).is_zero()
    assert filtration_dims(m63) == [1, 2, 3, 4]


def test_model_mismatch(m62, m72):
    with pytest.raises((ModelMismatchError, ValueError)):
        m62.one() + m72.one()


# --- symbol relations -----------------------------------------------------


def _gamma6(rng):
    pres = presentation(6)
    return GroupWord((rng.randrange(pres.free_rank), rng.choice((1, -1))) for _ in range(rng.randint(0, 4))).evaluate(
        pres.generators
    )


def _points(cls, rng, k):
    return [act(_gamma6(rng), cls.representative) for _ in range(k)]


def test_symbol_relations(m63):
    rng = random.Random(11)
    N = m63.N
    for cls in cusp_classes(6)[:4]:
        a, b, c = _points(cls, rng, 3)
        sym = lambda x, y: symbol_to_element(x, y, cls, m63)
        assert sym(a, a) == m63.one()
        assert sym(a, b) * sym(b, c) == sym(a, c)
        g = _gamma6(rng)
        assert sym(act(g, a), act(g, b)) == sym(a, b)
        # parabolic triviality: the loop around a's stabilizer is trivial
        A = a.matrix()
        pi = A * GL2Matrix(1, 6, 0, 1) * A.inverse()
        assert act(pi, a) == a
        loop = word_problem(sym_gamma(cls, a) * pi * sym_gamma(cls, a).inverse(), m63.presentation)
        assert phi(loop, m63) == m63.one()
        # depth N+1 vanishing
        prod = m63.one()
        for _ in range(N + 1):
            x, y = _points(cls, rng, 2)
            prod = prod * (sym(x, y) - m63.one())
        assert prod.is_zero()
        assert sym(a, b).augmentation() == 1


def sym_gamma(cls, x):
    """Witness in Gamma(6) carrying the class representative to x."""
    from modmotive.modular_group import cusp_reduce

    c, w = cusp_reduce(x, 6)
    assert c == cls
    return w


def test_symbol_needs_matching_class(m62):
    cls0, cls1 = cusp_classes(6)[:2]
    with pytest.raises(ValueError):
        symbol_to_element(cls0.representative, cls1.representative, cls0, m62)
