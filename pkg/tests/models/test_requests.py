import pytest
from pydantic import ValidationError

from src.models.requests import Command, OutputFormat, RunConfig


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig(command="audit", step=1e-3, smax=1.0)

        assert config.command is Command.AUDIT
        assert config.case == "all"
        assert config.format is OutputFormat.TEXT
        assert config.ics is None
        assert config.out is None

    def test_case_is_upper_cased(self):
        config = RunConfig(command="algebra", case=" vii ", step=1e-3, smax=1.0)
        assert config.case == "VII"

    def test_unknown_case(self):
        with pytest.raises(ValidationError):
            RunConfig(command="audit", case="X", step=1e-3, smax=1.0)

    def test_all_is_kept_lowercase(self):
        config = RunConfig(command="audit", case="all", step=1e-3, smax=1.0)
        assert config.case == "all"

    def test_ics_are_split(self):
        config = RunConfig(command="conserve", case="II", ics="0, 0,0,0, 1,0.3,0.2,0.1", step=1e-3, smax=1.0)
        assert config.ics == [0, 0, 0, 0, 1, 0.3, 0.2, 0.1]

    @pytest.mark.parametrize("ics", ["0,0,0,0,1", "0,0,0,0,1,0,0,0,0", "0,0,0,0,one,0,0,0"])
    def test_bad_ics(self, ics):
        with pytest.raises(ValidationError):
            RunConfig(command="conserve", case="II", ics=ics, step=1e-3, smax=1.0)

    @pytest.mark.parametrize("field", ["step", "smax"])
    def test_positive_numeric_window(self, field):
        values = {"step": 1e-3, "smax": 1.0, field: 0}
        with pytest.raises(ValidationError):
            RunConfig(command="conserve", case="II", **values)

    def test_unknown_command(self):
        with pytest.raises(ValidationError):
            RunConfig(command="plot", step=1e-3, smax=1.0)
