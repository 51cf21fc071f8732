import json

import pytest
from unittest.mock import patch

from src.main import EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, main, parse_config
from src.models.reports import AlgebraReport, AuditReport, ConserveReport, DeriveReport, EquationRecord
from src.models.requests import Command


@pytest.fixture
def derive_report():
    return DeriveReport(
        equations=[EquationRecord(monomial="1", equation="f_s"), EquationRecord(monomial="td^3", equation="mu_t")],
        findings=["published equation xd*zd has no key"],
    )


class TestParseConfig:
    def test_conserve_defaults(self):
        config = parse_config(["conserve", "--case", "ix"])
        assert config.command is Command.CONSERVE
        assert config.case == "IX"
        assert config.step == 1e-3
        assert config.smax == 1.0

    def test_audit_defaults_to_all(self):
        assert parse_config(["audit"]).case == "all"


class TestMain:
    def test_derive_json(self, capsys, derive_report):
        with patch('src.main.audit_service') as mock_audit_service:
            mock_audit_service.derive.return_value = derive_report

            code = main(["derive", "--format", "json"])

        assert code == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data == [{"monomial": "1", "equation": "f_s"}, {"monomial": "td^3", "equation": "mu_t"}]

    def test_derive_text(self, capsys, derive_report):
        with patch('src.main.audit_service') as mock_audit_service:
            mock_audit_service.derive.return_value = derive_report

            assert main(["derive"]) == EXIT_OK

        out = capsys.readouterr().out
        assert out.startswith("2 determining equations")
        assert "f_s = 0" in out
        assert "xd*zd" in out

    def test_single_case_audit(self, capsys):
        report = AuditReport(case="IX", constraints="A' = 0", generators=[], brackets=[])
        with patch('src.main.audit_service') as mock_audit_service:
            mock_audit_service.labels.return_value = ["IX"]
            mock_audit_service.audit_many.return_value = [report]

            assert main(["audit", "--case", "IX", "--format", "json"]) == EXIT_OK

        assert json.loads(capsys.readouterr().out)["case"] == "IX"
        mock_audit_service.summary.assert_not_called()

    def test_usage_error_is_reported_once(self, capsys):
        assert main(["audit", "--case", "X"]) == EXIT_USAGE
        assert capsys.readouterr().err.count("unknown case") == 1

    def test_unwritable_out(self, tmp_path, capsys):
        report = AlgebraReport(case="IX", n=3, basis=["d/ds", "d/dy", "d/dz"])
        target = tmp_path / "missing" / "algebra.json"
        with patch('src.main.audit_service') as mock_audit_service:
            mock_audit_service.algebra.return_value = report

            assert main(["algebra", "--case", "IX", "--out", str(target)]) == EXIT_USAGE

        assert capsys.readouterr().err.startswith("error:")
        assert not target.exists()

    def test_algebra_needs_a_case(self, capsys):
        assert main(["algebra"]) == EXIT_USAGE
        assert capsys.readouterr().err.startswith("error:")

    def test_algebra_refuses_all(self):
        assert main(["algebra", "--case", "all"]) == EXIT_USAGE

    def test_bad_initial_conditions(self):
        assert main(["conserve", "--case", "II", "--ics", "1,2,3"]) == EXIT_USAGE

    def test_internal_error(self, capsys, mocker):
        mocker.patch('src.main.audit_service.derive', side_effect=RuntimeError("boom"))

        assert main(["derive"]) == EXIT_INTERNAL
        assert "boom" in capsys.readouterr().err

    def test_out_writes_a_file(self, tmp_path, capsys):
        report = AlgebraReport(case="IX", n=3, basis=["d/dt", "d/dy", "-d/dz"], closed=False, findings=["refused: x"])
        target = tmp_path / "algebra.json"
        with patch('src.main.audit_service') as mock_audit_service:
            mock_audit_service.algebra.return_value = report

            assert main(["algebra", "--case", "IX", "--format", "json", "--out", str(target)]) == EXIT_OK

        assert capsys.readouterr().out == ""
        written = target.read_text(encoding="utf-8")
        assert written.endswith("\n")
        assert json.loads(written)["findings"] == ["refused: x"]

    def test_conserve_passes_options(self):
        report = ConserveReport(case="II", metric="A = 1, B = 1, C = 1", integrals=[])
        with patch('src.main.audit_service') as mock_audit_service:
            mock_audit_service.conserve.return_value = report

            code = main(["conserve", "--case", "II", "--ics", "0,0,0,0,1,0.3,0.2,0.1", "--step", "0.01"])

        assert code == EXIT_OK
        mock_audit_service.conserve.assert_called_once_with("II", None, [0, 0, 0, 0, 1, 0.3, 0.2, 0.1], 0.01, 1.0)


@pytest.mark.integration
class TestEndToEnd:
    def test_conserve_metric_violates_case(self, capsys):
        assert main(["conserve", "--case", "VIII", "--metric", "A=t"]) == EXIT_USAGE
        assert "error:" in capsys.readouterr().err

    def test_audit_case_seven(self, capsys):
        assert main(["audit", "--case", "VII", "--format", "json"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["verified_count"] == 4
