try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

PYPROJECT_PATH = Path(__file__).resolve().parent / "pyproject.toml"


def load_settings(config_path: Path = PYPROJECT_PATH) -> dict:
    """
    Load project defaults from pyproject.toml.

    Returns:
        dict: Configuration settings under the tool.formalrl namespace, or an
        empty dict when the file is not shipped next to the code.
    """

    if not config_path.is_file():
        return {}
    with open(config_path, "rb") as f:
        config = tomllib.load(f)
    return config.get("tool", {}).get("formalrl", {})


def section(name: str) -> dict:
    """
    Returns one [tool.formalrl.<name>] sub-table, empty when absent.
    """

    return dict(settings.get(name, {}))


settings = load_settings()
