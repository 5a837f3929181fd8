import math

import numpy as np
import pytest

from rotbec.fespace import (FeField, FeSpace, duffy_rule, evaluate,
                            evaluate_at_points, field_from_full, interpolate,
                            prolongate, read_field_dump, triangle_rule,
                            write_field)
from rotbec.mesh import build_uniform_mesh


# ---------------------------------------------------------------------------
# quadrature


def reference_moment(a, b):
    """Closed form of  int_T xi^a eta^b  over the unit reference triangle."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", [1, 2, 4, 6, 8])
def test_rule_exactness_reference(degree):
    rule = triangle_rule(degree)
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 1.0) < 1e-14
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            xi, eta = rule.points[:, 1], rule.points[:, 2]
            got = 0.5 * np.sum(rule.weights * xi ** a * eta ** b)
            want = reference_moment(a, b)
            assert abs(got - want) <= 1e-13 * abs(want)


def test_duffy_oracle_exactness():
    rule = duffy_rule(8)
    assert rule.n_points == 64
    for a in range(15):
        for b in range(15 - a):
            xi, eta = rule.points[:, 1], rule.points[:, 2]
            got = 0.5 * np.sum(rule.weights * xi ** a * eta ** b)
            want = reference_moment(a, b)
            assert abs(got - want) <= 1e-12 * abs(want)


@pytest.mark.parametrize("order,degree", [(1, 6), (2, 8)])
def test_rule_exactness_physical_elements(order, degree):
    """Summing the element rule over the mesh integrates monomials exactly."""
    space = FeSpace(build_uniform_mesh(1.0, 3), order)
    tab = space.tables()
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            vals = tab["xq"][..., 0] ** a * tab["xq"][..., 1] ** b
            got = tab["area"] * float((vals @ tab["w"]).sum())
            ia = (1 - (-1) ** (a + 1)) / (a + 1)  # int_{-1}^{1} x^a dx
            ib = (1 - (-1) ** (b + 1)) / (b + 1)
            want = ia * ib
            assert abs(got - want) <= 1e-13 * max(abs(want), 1.0)


def test_rule_exactness_single_triangle():
    """One physical element against the closed form for a right triangle.

    On the triangle (0,0)-(h,0)-(h,h): int x^a y^b = h^(a+b+2)/((b+1)(a+b+2)).
    Element 0 of an R=1, N_h=2 mesh is that triangle shifted by (-1, -1).
    """
    space = FeSpace(build_uniform_mesh(1.0, 2), 1)
    tab = space.tables()
    x = tab["xq"][0, :, 0] + 1.0
    y = tab["xq"][0, :, 1] + 1.0
    for a in range(5):
        for b in range(5 - a):
            got = tab["area"] * float((x ** a * y ** b) @ tab["w"])
            want = 1.0 / ((b + 1) * (a + b + 2))
            assert abs(got - want) <= 1e-13 * want


# ---------------------------------------------------------------------------
# space layout and basis


@pytest.mark.parametrize("order", [1, 2])
def test_dof_counts(order):
    n = 4
    space = FeSpace(build_uniform_mesh(1.0, n), order)
    assert space.n_dofs == (order * n + 1) ** 2
    assert space.n_interior == (order * n - 1) ** 2


@pytest.mark.parametrize("order", [1, 2])
def test_partition_of_unity(order):
    space = FeSpace(build_uniform_mesh(1.0, 4), order)
    tab = space.tables()
    assert np.abs(tab["phi"].sum(axis=0) - 1.0).max() <= 1e-13


@pytest.mark.parametrize("order", [1, 2])
def test_nodal_property(order):
    space = FeSpace(build_uniform_mesh(1.0, 2), order)
    nodes = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1],
                      [.5, .5, 0], [0, .5, .5], [.5, 0, .5]], dtype=float)
    nodes = nodes[:space.n_local_dofs]
    vals, _ = space.reference_basis(nodes)
    np.testing.assert_allclose(vals, np.eye(space.n_local_dofs), atol=1e-14)


def test_rejects_bad_order():
    with pytest.raises(ValueError):
        FeSpace(build_uniform_mesh(1.0, 2), 3)


# ---------------------------------------------------------------------------
# interpolation


def test_interpolate_zero():
    space = FeSpace(build_uniform_mesh(1.0, 4), 1)
    f = interpolate(space, lambda x, y: np.zeros_like(x))
    assert np.all(f.coeffs == 0)


def test_interpolate_linear_nodal_exact():
    space = FeSpace(build_uniform_mesh(1.0, 4), 1)
    f = interpolate(space, lambda x, y: x + 0j)
    pts = space.dof_coords[space.interior_dofs]
    np.testing.assert_array_equal(f.coeffs.real, pts[:, 0])
    assert np.all(f.coeffs.imag == 0)


def test_interpolate_vortex_ansatz_nodal_values():
    omega = 1.2
    space = FeSpace(build_uniform_mesh(6.0, 16), 1)

    def ansatz(x, y):
        return (omega / np.sqrt(np.pi)) * (x + 1j * y) \
            * np.exp(-0.5 * (x ** 2 + y ** 2))

    f = interpolate(space, ansatz)
    pts = space.dof_coords[space.interior_dofs]
    want = ansatz(pts[:, 0], pts[:, 1])
    np.testing.assert_allclose(f.coeffs, want, rtol=1e-15, atol=0)


def test_interpolate_rejects_nonfinite():
    space = FeSpace(build_uniform_mesh(1.0, 4), 1)
    with pytest.raises(ValueError, match=r"\("):
        interpolate(space, lambda x, y: np.where(x == 0.0, np.inf, 1.0))


# ---------------------------------------------------------------------------
# evaluation


def test_evaluate_constant_field():
    space = FeSpace(build_uniform_mesh(1.0, 4), 1)
    f = interpolate(space, lambda x, y: np.ones_like(x) + 0j)
    # pick an element with no boundary dofs: near the center
    elem = np.flatnonzero([
        np.all(space.interior_mask[row]) for row in space.element_dof_table
    ])[0]
    val, grad = evaluate(f, elem, (1 / 3, 1 / 3, 1 / 3))
    assert abs(val - 1.0) <= 1e-14
    assert np.abs(grad).max() <= 1e-13


def test_evaluate_linear_gradient():
    space = FeSpace(build_uniform_mesh(1.0, 4), 1)
    f = interpolate(space, lambda x, y: y + 0j)
    elem = np.flatnonzero([
        np.all(space.interior_mask[row]) for row in space.element_dof_table
    ])[0]
    _, grad = evaluate(f, elem, (0.2, 0.3, 0.5))
    np.testing.assert_allclose(grad.real, [0.0, 1.0], atol=1e-13)


def test_evaluate_quadratic_on_p2():
    space = FeSpace(build_uniform_mesh(1.0, 4), 2)
    f = interpolate(space, lambda x, y: x ** 2 + 0j)
    interior_elems = np.flatnonzero([
        np.all(space.interior_mask[row]) for row in space.element_dof_table
    ])
    for elem in interior_elems[:4]:
        val, grad = evaluate(f, elem, (1 / 3, 1 / 3, 1 / 3))
        nodes = space.dof_coords[space.element_dof_table[elem][:3]]
        centroid = nodes.mean(axis=0)
        assert abs(val - centroid[0] ** 2) <= 1e-13
        np.testing.assert_allclose(grad.real, [2 * centroid[0], 0.0],
                                   atol=1e-12)


def test_evaluate_rejects_bad_barycentric():
    space = FeSpace(build_uniform_mesh(1.0, 2), 1)
    f = interpolate(space, lambda x, y: x)
    with pytest.raises(ValueError):
        evaluate(f, 0, (0.5, 0.5, 0.5))


@pytest.mark.parametrize("order", [1, 2])
def test_polynomial_reproduction(order):
    """P1 reproduces affine functions, P2 quadratics, away from the boundary."""
    space = FeSpace(build_uniform_mesh(1.0, 4), order)
    if order == 1:
        g = lambda x, y: 0.5 + 2 * x - y  # noqa: E731
    else:
        g = lambda x, y: 0.5 + 2 * x - y + x * y - x ** 2  # noqa: E731
    f = interpolate(space, lambda x, y: g(x, y) + 0j)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.4, 0.4, size=(50, 2))  # interior patch only
    vals = evaluate_at_points(f, pts)
    np.testing.assert_allclose(vals.real, g(pts[:, 0], pts[:, 1]), atol=1e-13)


# ---------------------------------------------------------------------------
# prolongation


def test_prolongation_matches_pointwise_oracle():
    coarse = FeSpace(build_uniform_mesh(1.0, 4), 1)
    fine = FeSpace(build_uniform_mesh(1.0, 8), 1)
    # a single interior hat function
    c = np.zeros(coarse.n_interior)
    c[coarse.n_interior // 2] = 1.0
    hat = FeField(coarse, c)
    lifted = prolongate(hat, fine)
    pts = fine.dof_coords[fine.interior_dofs]
    oracle = evaluate_at_points(hat, pts)
    np.testing.assert_allclose(lifted.coeffs, oracle, rtol=0, atol=1e-15)


def test_prolongation_requires_nesting():
    coarse = FeSpace(build_uniform_mesh(1.0, 4), 1)
    other = FeSpace(build_uniform_mesh(1.0, 6), 1)
    f = interpolate(coarse, lambda x, y: x)
    with pytest.raises(ValueError):
        prolongate(f, other)


# ---------------------------------------------------------------------------
# dumps


def test_field_dump_roundtrip(tmp_path):
    space = FeSpace(build_uniform_mesh(2.0, 4), 2)
    f = interpolate(space, lambda x, y: np.exp(1j * x) * y)
    path = tmp_path / "field.txt"
    write_field(f, path, summary=(1.5, 2.5, 3.0, 4e-9))
    order, subdiv, hw, full, summary = read_field_dump(path)
    assert (order, subdiv, hw) == (2, 4, 2.0)
    np.testing.assert_allclose(full, f.full(), rtol=0, atol=0)
    assert summary == (1.5, 2.5, 3.0, 4e-9)
    back = field_from_full(space, full)
    np.testing.assert_array_equal(back.coeffs, f.coeffs)


def test_dump_rejects_truncated(tmp_path):
    space = FeSpace(build_uniform_mesh(1.0, 2), 1)
    f = interpolate(space, lambda x, y: x)
    path = tmp_path / "field.txt"
    write_field(f, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(ValueError, match="expected"):
        read_field_dump(path)
