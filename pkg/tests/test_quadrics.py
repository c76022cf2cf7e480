"""Tests for confocal families and elliptic coordinates."""

import numpy as np
import pytest

from confocal import (
    ConfocalFamily,
    confocal_parameters,
    euclidean,
    geodesic_distance,
    hyperbolic,
    ivory_parallelepiped_check,
    point_from_parameters,
    spherical,
    tangent_parameters_of_line,
)
from confocal.errors import DegeneratePoint, InvalidParameters, NoRealPoint
from confocal.quadrics import (
    confocal_equation,
    confocal_gradient,
    random_interior_point,
)

FAM2 = ConfocalFamily(euclidean(2), (4.0, 1.0))
FAM3 = ConfocalFamily(euclidean(3), (4.0, 2.0, 1.0))
FAMS2 = ConfocalFamily(spherical(2), (3.0, 2.0), b=1.0)
FAMH2 = ConfocalFamily(hyperbolic(2), (1.0, 0.5), b=2.0)
ALL_FAMS = [FAM2, FAM3, FAMS2, FAMH2]


def test_family_validation():
    with pytest.raises(InvalidParameters):
        ConfocalFamily(euclidean(2), (1.0, 4.0))
    with pytest.raises(InvalidParameters):
        ConfocalFamily(hyperbolic(2), (3.0, 1.0), b=2.0)
    with pytest.raises(InvalidParameters):
        ConfocalFamily(spherical(2), (3.0, 2.0))
    # circle degeneration is allowed in the plane
    assert ConfocalFamily(euclidean(2), (2.0, 2.0)).is_circular


def test_degenerate_axis_points():
    assert np.allclose(confocal_parameters(FAM2, (2.0, 0.0)).lam, (1.0, 0.0))
    assert np.allclose(confocal_parameters(FAM2, (0.0, 1.0)).lam, (4.0, 0.0))
    with pytest.raises(DegeneratePoint):
        confocal_parameters(FAM2, (2.0, 0.0), strict=True)


def test_roundtrip_axis_points():
    assert np.allclose(point_from_parameters(FAM2, (0.0, 1.0), signs=(1, 1)), (2.0, 0.0))
    assert np.allclose(point_from_parameters(FAM2, (4.0, 0.0), signs=(1, 1)), (0.0, 1.0))


def test_interlacing_and_residual():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        x = random_interior_point(FAM3, rng)
        lam = confocal_parameters(FAM3, x).lam
        assert 4.0 > lam[0] > 2.0 > lam[1] > 1.0 > lam[2]
        for lv in lam:
            assert abs(confocal_equation(FAM3, lv, x)) < 1e-10


def test_roundtrip_all_geometries():
    rng = np.random.default_rng(7)
    for fam in ALL_FAMS:
        for _ in range(100):
            x = random_interior_point(fam, rng)
            coords = confocal_parameters(fam, x)
            y = point_from_parameters(fam, coords)
            assert np.max(np.abs(np.asarray(x) - y)) < 1e-9


def test_gradient_orthogonality():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = random_interior_point(FAM3, rng)
        lam = confocal_parameters(FAM3, x).lam
        grads = [confocal_gradient(FAM3, lv, x) for lv in lam]
        for i in range(3):
            for j in range(i + 1, 3):
                gi = grads[i] / np.linalg.norm(grads[i])
                gj = grads[j] / np.linalg.norm(grads[j])
                assert abs(gi @ gj) < 1e-9


def test_noreal_point():
    with pytest.raises(NoRealPoint):
        # two parameters in the same class interval
        point_from_parameters(FAM2, (0.5, 0.2))


def test_tangent_line_vertex():
    # vertical line x = 2 touches the base ellipse at its vertex
    lam = tangent_parameters_of_line(FAM2, np.array([2.0, 0.0]), np.array([0.0, 1.0]))
    assert abs(lam[0] - 0.0) < 1e-10


def test_tangent_line_through_focus():
    f = np.sqrt(3.0)
    rng = np.random.default_rng(5)
    for _ in range(20):
        d = rng.normal(size=2)
        lam = tangent_parameters_of_line(FAM2, np.array([f, 0.0]), d)
        assert abs(lam[0] - 1.0) < 1e-9


def test_tangent_random_chords():
    rng = np.random.default_rng(11)
    for _ in range(100):
        x = random_interior_point(FAM2, rng)
        # scale inside the base ellipse
        x = x * 0.8 / np.sqrt(x[0] ** 2 / 4.0 + x[1] ** 2)
        d = rng.normal(size=2)
        lam = tangent_parameters_of_line(FAM2, x, d)[0]
        assert (0.0 < lam < 1.0) or (1.0 < lam < 4.0)
        # tangency: restricted quadratic has vanishing discriminant
        nu = np.array([-d[1], d[0]]) / np.linalg.norm(d)
        c = nu @ x
        assert abs((4.0 - lam) * nu[0] ** 2 + (1.0 - lam) * nu[1] ** 2 - c * c) < 1e-10


def test_tangent_count_in_space():
    rng = np.random.default_rng(13)
    for _ in range(30):
        p = random_interior_point(FAM3, rng)
        d = rng.normal(size=3)
        lams = tangent_parameters_of_line(FAM3, p, d)
        assert len(lams) == 2
        for lv in lams:
            a = np.asarray(FAM3.a)
            qdd = np.sum(d * d / (a - lv))
            qpd = np.sum(p * d / (a - lv))
            qpp = np.sum(p * p / (a - lv)) - 1.0
            assert abs(qpd * qpd - qdd * qpp) < 1e-8


def test_geodesic_distance_basics():
    assert geodesic_distance(euclidean(2), (0.0, 0.0), (3.0, 4.0)) == 5.0
    assert abs(geodesic_distance(spherical(2), (1, 0, 0), (0, 1, 0)) - np.pi / 2) < 1e-14
    x = np.array([np.sqrt(2.0), 0.0, 1.0])
    assert geodesic_distance(hyperbolic(2), x, x) == 0.0


def test_ivory_boxes_all_geometries():
    for fam in ALL_FAMS:
        rng = np.random.default_rng(17)
        for _ in range(25):
            x1 = random_interior_point(fam, rng)
            x2 = random_interior_point(fam, rng)
            l1 = confocal_parameters(fam, x1).lam
            l2 = confocal_parameters(fam, x2).lam
            intervals = [tuple(sorted((l1[k], l2[k]), reverse=True))
                         for k in range(fam.n)]
            rep = ivory_parallelepiped_check(fam, intervals)
            assert rep["spread"] < 1e-8
            assert rep["passed"]


def test_ivory_named_example():
    rep = ivory_parallelepiped_check(FAM2, [(2.5, 1.5), (0.5, 0.2)])
    assert rep["spread"] < 1e-9


def test_ivory_circle_family():
    fam = ConfocalFamily(euclidean(2), (2.0, 2.0))
    rep = ivory_parallelepiped_check(fam, [(-2.0, 0.5), (0.3, 1.2)])
    assert rep["spread"] < 1e-12
