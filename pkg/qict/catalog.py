import json
from pathlib import Path
from typing import Any, Dict, List

from qict.errors import ScenarioParseError

SCENARIO_DIR = Path(__file__).parent / "scenarios"


def list_scenarios() -> List[str]:
    """Names of the bundled scenarios, sorted"""
    return sorted(path.stem for path in SCENARIO_DIR.glob("*.json"))


def describe(name: str) -> str:
    return load_document(name).get("description", "")


def resolve(scenario: str) -> Path:
    """A path to an existing file, or the name of a bundled scenario"""
    path = Path(scenario)
    if path.is_file():
        return path
    bundled = SCENARIO_DIR / f"{scenario}.json"
    if bundled.is_file():
        return bundled
    raise ScenarioParseError(
        f"no scenario file or bundled scenario named {scenario!r}; try list-scenarios"
    )


def load_document(scenario: str) -> Dict[str, Any]:
    """Parse a scenario document; anything but a JSON object is a parse error"""
    path = resolve(scenario)
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    except (OSError, UnicodeDecodeError) as e:
        raise ScenarioParseError(f"{path}: cannot read scenario: {e}")
    if not isinstance(document, dict):
        raise ScenarioParseError(f"{path}: a scenario must be a JSON object")
    return document
