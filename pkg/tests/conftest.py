from pathlib import Path
from typing import Dict, List

import pandas as pd
import pytest
import yaml

from src.models.records import RAW_COLUMNS, RawRecord
from src.stages.category_encoder import CategoryEncoder, load_mapping
from src.stages.chronology_parser import ChronologyParser, load_modifiers
from src.stages.geo_resolver import GeoResolver
from src.stages.leiden_normalizer import AnnotationLexicon, LeidenNormalizer
from src.utils.config import PipelineConfig, load_settings

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "config"
FIXTURES = Path(__file__).resolve().parent / "fixtures"

GOLDEN_RAW: Dict[str, str] = {
    "site": "Montanya Frontera",
    "refMLH": "F.11.30",
    "refHesperia": "V.04.50",
    "text": "A: [.]uŕbokon[---]+ B: :baisuka[-c.1 ó 2-]esite[---]",
    "municipality": "Sagunto",
    "province": "Valencia",
    "material": "PIEDRA",
    "medium": "Pedestal",
    "writing_direction": "DEXTROGIRA",
    "technique": "INCISION",
    "signary": "LEVANTINO",
    "dual_system": "NO DUAL",
    "separators": "CARECE",
    "dating": "Rodríguez Ramos: 200 - 50 a.C.",
}

GOLDEN_ROW: List[str] = [
    "Montanya Frontera",
    "F.11.30",
    "V.04.50",
    "A: [.]uŕbokon[---]+ B: :baisuka[-c.1 ó 2-]esite[---]",
    "Sagunto",
    "Valencia",
    "PIEDRA",
    "Pedestal",
    "DEXTROGIRA",
    "INCISION",
    "LEVANTINO",
    "NO DUAL",
    "CARECE",
    "Rodríguez Ramos: 200 - 50 a.C.",
    "39.67995785",
    "-0.27841866",
    "39.48",
    "-0.38",
    "-200.0",
    "-50.0",
    "-125.0",
    "150.0",
    "A: +uŕbokon[---]+ B: :baisuka[---]esite[---]",
    "PIEDRA",
    "2",
    "PEDESTAL",
    "13",
    "1",
    "INCISION",
    "1",
    "LEVANTINO",
    "1",
    "NO DUAL",
    "1",
    "CARECE",
    "1",
]


@pytest.fixture(scope="session")
def settings():
    return load_settings(str(CONFIG_DIR / "config.yaml"))


@pytest.fixture(scope="session")
def lexicon():
    return AnnotationLexicon.from_file(CONFIG_DIR / "annotation_lexicon.txt")


@pytest.fixture(scope="session")
def normalizer(lexicon):
    return LeidenNormalizer(lexicon)


@pytest.fixture(scope="session")
def modifiers():
    return load_modifiers(CONFIG_DIR / "chronology_modifiers.csv")


@pytest.fixture(scope="session")
def parser(modifiers):
    return ChronologyParser(modifiers)


@pytest.fixture(scope="session")
def mappings():
    return load_mapping(CONFIG_DIR / "category_mappings.csv")


@pytest.fixture(scope="session")
def encoder(mappings):
    return CategoryEncoder(mappings)


@pytest.fixture(scope="session")
def geo(settings):
    return GeoResolver.from_config(settings["gazetteers"], CONFIG_DIR / "gazetteers")


@pytest.fixture
def golden_record():
    return RawRecord.model_validate(GOLDEN_RAW)


@pytest.fixture
def write_export(tmp_path):
    """Write raw rows (wire-name dicts) as a CSV export and return its path"""

    def _write(rows, name="export.csv", sep=",", columns=None):
        path = tmp_path / name
        columns = columns or [c for c in RAW_COLUMNS if any(c in row for row in rows)] or RAW_COLUMNS
        frame = pd.DataFrame(rows, columns=columns).fillna("")
        frame.to_csv(path, sep=sep, index=False, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def make_config(tmp_path, settings):
    """Build a PipelineConfig over the shipped resources"""

    def _make(input_path, **overrides):
        fields = {
            "input": input_path,
            "output": tmp_path / "out" / "dataset.csv",
            "gazetteer_dir": CONFIG_DIR / "gazetteers",
            "mappings": CONFIG_DIR / "category_mappings.csv",
            "lexicon": CONFIG_DIR / "annotation_lexicon.txt",
            "modifiers": CONFIG_DIR / "chronology_modifiers.csv",
        }
        fields.update(overrides)
        return PipelineConfig.build(settings, fields)

    return _make


@pytest.fixture
def settings_file(tmp_path, settings):
    """A settings file with absolute resource paths and no log file"""
    data = {key: value for key, value in settings.items() if key != "logging"}
    data["paths"] = {
        "gazetteers": str(CONFIG_DIR / "gazetteers"),
        "mappings": str(CONFIG_DIR / "category_mappings.csv"),
        "lexicon": str(CONFIG_DIR / "annotation_lexicon.txt"),
        "modifiers": str(CONFIG_DIR / "chronology_modifiers.csv"),
    }
    path = tmp_path / "settings.yaml"
    path.write_text(yaml.safe_dump(data, allow_unicode=True), encoding="utf-8")
    return path
