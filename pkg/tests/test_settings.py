import pytest
from pydantic import ValidationError

from graypixel.config.settings import Settings


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("GRAYPIXEL_LOG_LEVEL", "GRAYPIXEL_JOBS", "GRAYPIXEL_REPORT_FORMAT"):
        monkeypatch.delenv(name, raising=False)


def test_dotenv_file_is_read(tmp_path):
    env = tmp_path / ".env"
    env.write_text("GRAYPIXEL_LOG_LEVEL=DEBUG\nGRAYPIXEL_JOBS=3\n", encoding="utf-8")
    loaded = Settings(_env_file=env)
    assert loaded.log_level == "DEBUG"
    assert loaded.jobs == 3


def test_environment_beats_dotenv(tmp_path, monkeypatch):
    env = tmp_path / ".env"
    env.write_text("GRAYPIXEL_JOBS=3\n", encoding="utf-8")
    monkeypatch.setenv("GRAYPIXEL_JOBS", "5")
    assert Settings(_env_file=env).jobs == 5


def test_bad_report_format_is_rejected(tmp_path):
    env = tmp_path / ".env"
    env.write_text("GRAYPIXEL_REPORT_FORMAT=xml\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        Settings(_env_file=env)
