import unittest

import numpy as np
import pytest
import scipy.sparse

from polyseep.element import form_elements
from polyseep.exceptions import (
    GeometryError,
    InvalidConfig,
    ModelError,
    OracleSizeError,
    SingularSystemError,
    VerificationFailure,
)
from polyseep.ingest import deck_to_model, parse_inp
from polyseep.mesh import polygon_area_centroid
from polyseep.model import Material
from polyseep.solver import GlobalSystem
from polyseep.tests.support import (
    UNIT_SQUARE,
    column,
    one_square,
    read_fixture,
)
from polyseep.verification.fem import (
    bilinear_quad,
    fem_reference,
    form_fem_elements,
)
from polyseep.verification.norms import (
    l2_relative_error,
    max_nodal_error,
    pointwise_relative_error,
)
from polyseep.verification.ode import (
    backward_euler,
    history_error,
    observed_order,
    ode_oracle,
)
from polyseep.verification.study import (
    RefinementRow,
    VerificationReport,
    convergence_study,
    rates,
)
from polyseep.verification.suites import (
    DAM_GAP_RISE_TOL,
    dam_mesh,
    dam_model,
    dam_suite,
    final_steady,
    harmonic_family,
    inclusion_suite,
    largest_rise,
    oracle_suite,
    patch_field,
    patch_suite,
    prescribed_model,
    run_suites,
)


def _scalar(k=1.0, m=1.0):
    return GlobalSystem(scipy.sparse.csr_matrix([[k]]),
                        scipy.sparse.csr_matrix([[m]]), {1: 0})


class NormsTestCase(unittest.TestCase):
    def setUp(self):
        self.mesh = one_square()
        self.ops = form_elements(column(layers=1))
        self.nodal = np.array([patch_field(x, y) for x, y in self.mesh.xy])

    def test_exact_field(self):
        error = l2_relative_error(self.mesh, self.ops, self.nodal,
                                  patch_field)
        assert error < 1e-14

    def test_constant_offset(self):
        # the square integral of 1 + 2x + 3y is 40 / 3
        error = l2_relative_error(self.mesh, self.ops, self.nodal + 0.25,
                                  patch_field)
        assert error == pytest.approx(0.25 * np.sqrt(3.0 / 40.0), rel=1e-12)

    def test_scale_invariant(self):
        a = l2_relative_error(self.mesh, self.ops, self.nodal + 0.25,
                              self.nodal)
        b = l2_relative_error(self.mesh, self.ops, 4.0 * (self.nodal + 0.25),
                              4.0 * self.nodal)
        assert a == pytest.approx(b, rel=1e-12)

    def test_nodal_reference_with_other_operators(self):
        fem_ops = form_fem_elements(column(layers=1))
        error = l2_relative_error(self.mesh, self.ops, self.nodal,
                                  self.nodal, reference_operators=fem_ops)
        assert error < 1e-12

    def test_zero_reference(self):
        with pytest.raises(VerificationFailure):
            l2_relative_error(self.mesh, self.ops, self.nodal,
                              lambda x, y: 0.0)
        with pytest.raises(VerificationFailure):
            l2_relative_error(self.mesh, self.ops, self.nodal, [1.0, 2.0])

    def test_pointwise(self):
        assert pointwise_relative_error([0.0, 3.0], [0.0, 4.0]) == 0.25
        with pytest.raises(VerificationFailure):
            pointwise_relative_error([1.0], [1.0, 2.0])
        with pytest.raises(VerificationFailure):
            pointwise_relative_error([1.0], [0.0])

    def test_max_nodal_error(self):
        heads = self.nodal.copy()
        heads[2] += 0.5
        assert max_nodal_error(self.mesh, heads, patch_field) == \
            pytest.approx(0.5)


class BilinearReferenceTestCase(unittest.TestCase):
    def test_column(self):
        model = column()
        solution = fem_reference(model)
        assert np.allclose(solution.steady.heads, 5.0 * model.mesh.xy[:, 1],
                           atol=1e-12)

    def test_inverted(self):
        with pytest.raises(GeometryError):
            bilinear_quad(UNIT_SQUARE[::-1], Material(1.0, 1.0))

    def test_not_a_quadrilateral(self):
        with pytest.raises(ModelError):
            bilinear_quad(UNIT_SQUARE[:3], Material(1.0, 1.0))
        model = deck_to_model(parse_inp(read_fixture("mixed_polygons.inp")))
        with pytest.raises(ModelError):
            form_fem_elements(model)

    def test_interpolate(self):
        quad = bilinear_quad([(0.0, 0.0), (2.0, 0.0), (2.5, 1.0),
                              (0.0, 1.0)], Material(1.0, 1.0))
        heads = [patch_field(x, y) for x, y in quad.coords]
        h, q = quad.interpolate(heads, (1.0, 0.5))
        assert h == pytest.approx(patch_field(1.0, 0.5), abs=1e-12)
        assert np.allclose(q, [-2.0, -3.0], atol=1e-12)


class OdeTestCase(unittest.TestCase):
    def test_scalar_decay(self):
        h = ode_oracle(_scalar(), [1.0], [0.5, 1.0])
        assert h.shape == (2, 1)
        assert h[0, 0] == pytest.approx(np.exp(-0.5), abs=1e-10)
        assert h[1, 0] == pytest.approx(np.exp(-1.0), abs=1e-10)

    def test_source(self):
        h = ode_oracle(_scalar(k=2.0), [0.0], [10.0], Q=np.array([4.0]))
        assert h[-1, 0] == pytest.approx(2.0, abs=1e-8)

    def test_size_limit(self):
        n = 501
        eye = scipy.sparse.identity(n, format="csr")
        system = GlobalSystem(eye, eye, dict((i, i) for i in range(n)))
        with pytest.raises(OracleSizeError):
            ode_oracle(system, np.zeros(n), [1.0])

    def test_no_storage(self):
        with pytest.raises(SingularSystemError):
            ode_oracle(_scalar(m=0.0), [1.0], [1.0])

    def test_backward_euler(self):
        h = backward_euler(_scalar(), [1.0], [0.5, 1.0])
        assert h[:, 0].tolist() == pytest.approx([1 / 1.5, 1 / 2.25],
                                                 rel=1e-14)

    def test_history_error_and_order(self):
        ref = np.array([[1.0, 0.0], [2.0, 0.0]])
        approx = np.array([[1.1, 0.0], [2.0, 0.1]])
        assert history_error(approx, ref) == pytest.approx(0.1)
        assert observed_order([0.1, 0.05, 0.025], [1.0, 0.5, 0.25]) == \
            pytest.approx([1.0, 1.0])


class StudyTestCase(unittest.TestCase):
    def test_rates(self):
        assert rates([0.5, 0.25, 0.125], [4.0, 1.0, 0.5]) == \
            pytest.approx([None, 2.0, 1.0])

    def test_report(self):
        report = VerificationReport("demo")
        assert report.passed
        assert report.check("error", 0.5, 1.0)
        assert not report.check("rate", 1.5, 1.9, at_least=True)
        assert not report.passed
        report.rows = [RefinementRow(0.5, 9, 0.1),
                       RefinementRow(0.25, 25, 0.025, rate=2.0,
                                     pointwise=0.01)]
        assert report.final_rate == 2.0
        assert report.as_csv() == (
            "size,n_dof,error,rate,pointwise\n"
            "0.5,9,0.1,,\n"
            "0.25,25,0.025,2.0,0.01\n")
        text = report.as_text()
        assert text.startswith("suite demo: FAILED\n")
        assert "FAIL" in text.splitlines()[2]

    def test_harmonic_convergence(self):
        report = convergence_study(harmonic_family, [0.5, 0.25, 0.125],
                                   monitors=[(0.5, 0.5)])
        assert not report.exact
        assert [r.n_dof for r in report.rows] == [9, 25, 81]
        errors = [r.error for r in report.rows]
        assert errors[0] > errors[1] > errors[2]
        assert report.final_rate > 1.5
        assert report.rows[-1].pointwise < report.rows[0].pointwise

    def test_exact_family(self):
        def family(size):
            model = harmonic_family(size)[0]
            return prescribed_model(model.mesh, patch_field), patch_field

        report = convergence_study(family, [0.5, 0.25])
        assert report.exact
        assert report.final_rate is None
        assert "exact" in report.as_text()


class SuitesTestCase(unittest.TestCase):
    def test_patch(self):
        report = patch_suite()
        assert report.passed, report.as_text()
        assert sorted(report.checks) == ["fem max nodal error",
                                         "sbfem max interior error",
                                         "sbfem max nodal error"]

    def test_oracle(self):
        report = oracle_suite()
        assert report.passed, report.as_text()

    def test_inclusion(self):
        report = inclusion_suite()
        assert report.passed, report.as_text()

    def test_dam(self):
        report = dam_suite()
        assert report.passed, report.as_text()
        assert sorted(report.checks) == [
            "final gap over ramp-end gap", "final vs steady",
            "monitor drop after ramp", "monitor gap rise after ramp",
            "sbfem vs fem monitor"]
        assert report.checks["monitor gap rise after ramp"][1] == \
            DAM_GAP_RISE_TOL
        assert report.checks["final gap over ramp-end gap"][0] < 0.0

    def test_largest_rise(self):
        times = np.array([0.0, 50.0, 100.0, 150.0, 200.0, 250.0])
        gap = np.array([0.0, 0.5, 0.4, 0.1, 0.3, 0.2])
        assert largest_rise(times, gap, 100.0) == pytest.approx(0.2)
        assert largest_rise(times, gap, 0.0) == pytest.approx(0.5)
        assert largest_rise(times, np.ones(6), 0.0) == 0.0
        assert largest_rise(times, gap, 250.0) == 0.0

    def test_unknown_suite(self):
        with pytest.raises(InvalidConfig):
            run_suites(["patch", "bogus"])

    def test_dam_mesh_is_graded(self):
        mesh = dam_mesh()
        assert 5 in {len(el.node_ids) for el in mesh.elements}
        area = sum(polygon_area_centroid(mesh.element_coords(el))[0]
                   for el in mesh.elements)
        assert area == pytest.approx(800.0, rel=1e-12)

    def test_final_steady(self):
        model = final_steady(dam_model())
        assert model.transient is None
        ids, heads = model.dirichlet_at()
        left = set(model.mesh.nodes_with_tag("left"))
        assert {h for i, h in zip(ids, heads) if i in left} == {30.0}
