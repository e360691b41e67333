import os

import numpy as np
import pytest

from ripalm.cli.certificate import certificate_bpdn, certificate_for, certificate_qrot
from ripalm.cli.main import main
from ripalm.cli.runner import GeneratedInstance, SolveOutcome, certify, save_instance
from ripalm.common.errors import InputError
from ripalm.common.models import GeneratorKind, GeneratorSpec, KktResiduals, ProblemKind, SolveReport, SolveStatus
from ripalm.common.store import instance_store, write_matrix, write_vector
from ripalm.problems.bpdn.model import BpdnPrimalPoint
from ripalm.problems.bpdn.residuals import kkt_residuals_bpdn
from ripalm.problems.qrot.generators import gen_gaussian_mixture_instance
from ripalm.problems.qrot.model import QrotDualPoint
from ripalm.problems.qrot.residuals import kkt_residuals_qrot


def assert_same_residuals(certified: KktResiduals, expected: KktResiduals):
    for name in ("primal", "dual", "gap", "res"):
        assert getattr(certified, name) == pytest.approx(getattr(expected, name), rel=1e-9, abs=1e-14)
    if expected.complementarity is None:
        assert certified.complementarity is None
    else:
        assert certified.complementarity == pytest.approx(expected.complementarity, rel=1e-9, abs=1e-14)


@pytest.mark.parametrize("lam", [1.0, 0.0])
def test_qrot_certificate_agrees_with_solver_residuals(rng, lam):
    inst = gen_gaussian_mixture_instance(6, 7, seed=5, lam=lam)
    for _ in range(5):
        u, v = rng.standard_normal(6), rng.standard_normal(7)
        X = np.abs(rng.standard_normal((6, 7))) / 40.0
        X[0, 0] = -0.01
        certified = certificate_qrot(inst, u, v, X)
        assert_same_residuals(certified.residuals, kkt_residuals_qrot(inst, QrotDualPoint(u, v), X))


def test_qrot_certificate_vanishes_at_toy_optimum(toy_qrot):
    certified = certificate_qrot(toy_qrot, np.full(2, 0.125), np.full(2, 0.125), np.full((2, 2), 0.25))
    assert certified.residuals.res == pytest.approx(0.0, abs=1e-15)
    assert certified.reconstruction == pytest.approx(0.0, abs=1e-15)


def test_qrot_certificate_rejects_moved_plan(toy_qrot):
    u = v = np.full(2, 0.125)
    moved = certificate_qrot(toy_qrot, u, v, np.array([[0.35, 0.15], [0.15, 0.35]]))
    # marginals still hold, so only the dual side and the prox map notice
    assert moved.residuals.primal == pytest.approx(0.0, abs=1e-15)
    assert moved.residuals.dual > 0
    assert moved.residuals.res > 1e-3
    assert moved.reconstruction > 1e-2


def test_bpdn_certificate_agrees_with_solver_residuals(rng, small_bpdn):
    for _ in range(5):
        s, t, y = rng.standard_normal(15), rng.standard_normal(6), rng.standard_normal(6)
        certified = certificate_bpdn(small_bpdn, s, t, y)
        assert_same_residuals(certified.residuals, kkt_residuals_bpdn(small_bpdn, BpdnPrimalPoint(s, t), y))
        assert certified.reconstruction >= 0


def test_certificate_for_checks_arrays(toy_qrot, small_bpdn):
    with pytest.raises(InputError, match="missing"):
        certificate_for(toy_qrot, {"u": np.zeros(2)}, {"X": np.zeros((2, 2))})
    with pytest.raises(InputError, match="do not fit"):
        certificate_for(toy_qrot, {"u": np.zeros(3), "v": np.zeros(2)}, {"X": np.zeros((2, 2))})
    with pytest.raises(InputError, match="do not fit"):
        certificate_for(small_bpdn, {"s": np.zeros(15), "t": np.zeros(6), "y": np.zeros(5)}, {})


def test_certify_ignores_the_solver_breakdown(toy_qrot, caplog):
    u = v = np.full(2, 0.125)
    clean = KktResiduals(primal=0.0, dual=0.0, complementarity=0.0, gap=0.0, res=0.0)
    outcome = SolveOutcome(
        report=SolveReport(status=SolveStatus.CONVERGED),
        breakdown=clean,
        vectors={"u": u, "v": v},
        matrices={"X": np.full((2, 2), 0.3)},
    )
    with caplog.at_level("WARNING", logger="ripalm.cli.runner"):
        certify(outcome, toy_qrot, 1e-6)
    assert outcome.report.status == SolveStatus.FAILED
    assert outcome.report.breakdown == clean
    assert outcome.report.certificate.residuals.res > 1e-2
    assert any("disagrees with certificate" in r.getMessage() for r in caplog.records)


@pytest.fixture
def solved_toy(tmp_path, toy_qrot):
    spec = GeneratorSpec(problem=ProblemKind.QROT, generator=GeneratorKind.GAUSSIAN_MIXTURE, m=2, n=2)
    inst_dir = str(tmp_path / "toy")
    save_instance(GeneratedInstance(toy_qrot, spec), inst_dir)
    out = str(tmp_path / "sol")
    assert main(["solve", "--problem", "qrot", "--instance", inst_dir, "--out", out]) == 0
    return inst_dir, out


def test_solve_writes_certificate(solved_toy):
    _, out = solved_toy
    report = instance_store.read_report(out)
    assert report.certificate is not None
    assert report.certificate.residuals.res < 1e-6
    assert report.certificate.residuals.res == pytest.approx(report.breakdown.res, rel=1e-6, abs=1e-12)


def test_certify_command_accepts_untouched_solution(solved_toy):
    inst_dir, out = solved_toy
    assert main(["certify", "--problem", "qrot", "--instance", inst_dir, "--solution", out]) == 0
    assert instance_store.read_report(out).status == SolveStatus.CONVERGED


def test_certify_command_fails_perturbed_plan(solved_toy):
    inst_dir, out = solved_toy
    X = instance_store.load_matrices(out, ["X"])["X"]
    write_matrix(os.path.join(out, "X.txt"), X + 0.1)
    assert main(["certify", "--problem", "qrot", "--instance", inst_dir, "--solution", out]) == 1
    report = instance_store.read_report(out)
    assert report.status == SolveStatus.FAILED
    assert report.certificate.residuals.primal > 1e-2
    assert report.breakdown.res < 1e-6


def test_certify_command_fails_perturbed_potentials(solved_toy):
    inst_dir, out = solved_toy
    u = instance_store.load_vectors(out, ["u"])["u"]
    write_vector(os.path.join(out, "u.txt"), u + np.array([0.2, -0.2]))
    assert main(["certify", "--problem", "qrot", "--instance", inst_dir, "--solution", out]) == 1
    assert instance_store.read_report(out).status == SolveStatus.FAILED


def test_certify_command_fails_perturbed_bpdn_signal(tmp_path):
    inst_dir = str(tmp_path / "bp")
    assert main(["generate", "--problem", "bpdn", "--generator", "synthetic",
                 "--m", "20", "--n", "60", "--s", "4", "--delta", "0.05", "--seed", "2", "--out", inst_dir]) == 0
    out = str(tmp_path / "sol")
    main(["solve", "--problem", "bpdn", "--instance", inst_dir, "--out", out])
    s = instance_store.load_vectors(out, ["s"])["s"]
    s = s + 0.5 * (np.arange(s.size) == 0)
    write_vector(os.path.join(out, "s.txt"), s)
    assert main(["certify", "--problem", "bpdn", "--instance", inst_dir, "--solution", out]) == 1
    report = instance_store.read_report(out)
    assert report.status != SolveStatus.CONVERGED
    assert report.certificate.residuals.res > 1e-3


def test_certify_command_input_errors(solved_toy, tmp_path):
    inst_dir, out = solved_toy
    assert main(["certify", "--problem", "bpdn", "--instance", inst_dir, "--solution", out]) == 2
    os.remove(os.path.join(out, "v.txt"))
    assert main(["certify", "--problem", "qrot", "--instance", inst_dir, "--solution", out]) == 2
