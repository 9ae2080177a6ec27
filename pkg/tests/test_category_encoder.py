import pytest

from src.models.records import RawRecord
from src.stages.category_encoder import (
    CATEGORY_CEILINGS,
    Attribute,
    CategoryEncoder,
    CategoryMapping,
    check_counts,
    decode,
    encode,
    load_mapping,
)
from src.stages.base_stage import IssueKind
from src.utils.errors import ResourceLoadError

HEADER = "attribute,raw_value,category,code\n"


def _write(tmp_path, body):
    path = tmp_path / "mapping.csv"
    path.write_text(HEADER + body, encoding="utf-8")
    return path


@pytest.mark.parametrize(
    "attribute, raw, expected",
    [
        (Attribute.MATERIAL, "PIEDRA", ("PIEDRA", 2)),
        (Attribute.MEDIUM, "Pedestal", ("PEDESTAL", 13)),
        (Attribute.WRITING_DIRECTION, "DEXTROGIRA", ("DEXTROGIRA", 1)),
        (Attribute.TECHNIQUE, "INCISION", ("INCISION", 1)),
        (Attribute.SIGNARY, "LEVANTINO", ("LEVANTINO", 1)),
        (Attribute.DUAL_SYSTEM, "NO DUAL", ("NO DUAL", 1)),
        (Attribute.SEPARATORS, "CARECE", ("CARECE", 1)),
        (Attribute.MATERIAL, "  cerámica ", ("CERAMICA", 1)),
        (Attribute.DUAL_SYSTEM, "DUAL?", ("INDETERMINADO", 3)),
        (Attribute.MATERIAL, "VIDRIO", ("OTROS", 12)),
        (Attribute.MATERIAL, None, (None, None)),
        (Attribute.MEDIUM, "   ", (None, None)),
    ],
)
def test_encode(mappings, attribute, raw, expected):
    assert encode(attribute, raw, mappings[attribute]) == expected


def test_encode_rejects_a_foreign_mapping(mappings):
    with pytest.raises(ValueError):
        encode(Attribute.MEDIUM, "ARA", mappings[Attribute.MATERIAL])


def test_decode_inverts_encode(mappings):
    assert decode(13, mappings[Attribute.MEDIUM]) == "PEDESTAL"
    for attribute, mapping in mappings.items():
        for category in mapping.categories:
            assert encode(attribute, category, mapping)[0] == category
    with pytest.raises(KeyError):
        decode(99, mappings[Attribute.MEDIUM])


def test_seed_mapping_reaches_every_ceiling(mappings):
    for attribute, ceiling in CATEGORY_CEILINGS.items():
        mapping = mappings[attribute]
        assert len(mapping.codes) == ceiling, attribute
        assert len(set(mapping.codes.values())) == ceiling, attribute
        assert mapping.validate(ceiling) == []


def test_golden_record_codes(encoder, golden_record):
    output = encoder.process(golden_record)
    assert output["material_cat"] == "PIEDRA" and output["material_cat_code"] == 2
    assert output["medium_cat"] == "PEDESTAL" and output["medium_cat_code"] == 13
    assert "writing_direction_cat" not in output
    assert output["writing_direction_cat_code"] == 1
    assert output["technique_cat_code"] == 1
    assert output["signary_cat_code"] == 1
    assert output["dual_system_cat"] == "NO DUAL" and output["dual_system_cat_code"] == 1
    assert output["separators_cat_code"] == 1
    assert output["issues"] == []


def test_mapping_over_the_ceiling_is_rejected(tmp_path):
    path = _write(tmp_path, "DUAL_SYSTEM,NO DUAL,NO DUAL,1\nDUAL_SYSTEM,DUAL,DUAL,2\nDUAL_SYSTEM,DUAL?,DUDOSO,3\nDUAL_SYSTEM,X,OTRO,4\n")
    with pytest.raises(ResourceLoadError, match="exceed the ceiling of 3"):
        load_mapping(path)


def test_shared_code_is_rejected(tmp_path):
    path = _write(tmp_path, "MATERIAL,PIEDRA,PIEDRA,2\nMATERIAL,PLOMO,PLOMO,2\n")
    with pytest.raises(ResourceLoadError, match="code 2 shared"):
        load_mapping(path)


@pytest.mark.parametrize(
    "body, message",
    [
        ("COLOR,ROJO,ROJO,1\n", "row 1: unknown attribute"),
        ("MATERIAL,PIEDRA,PIEDRA,dos\n", "row 1: code 'dos' is not an integer"),
        ("MATERIAL,PIEDRA,PIEDRA,2\nMATERIAL,PIEDRA,LOSA,3\n", "row 2"),
        ("MATERIAL,PIEDRA,PIEDRA,2\nMATERIAL,ROCA,PIEDRA,5\n", "row 2: 'PIEDRA' already has code 2"),
        ("MATERIAL,PIEDRA,,2\n", "row 1: empty category"),
    ],
)
def test_malformed_rows_name_the_row(tmp_path, body, message):
    with pytest.raises(ResourceLoadError, match=message):
        load_mapping(_write(tmp_path, body))


def test_unmapped_value_without_bucket_is_null_and_reported(tmp_path):
    mappings = load_mapping(_write(tmp_path, "MATERIAL,PIEDRA,PIEDRA,2\n"))
    encoder = CategoryEncoder(mappings)
    output = encoder.process(RawRecord(ref_hesperia="X.1", material="VIDRIO", medium="ARA"))
    assert output["material_cat"] is None and output["material_cat_code"] is None
    assert [issue.kind for issue in output["issues"]] == [IssueKind.UNMAPPED_VALUE] * 2
    assert "VIDRIO" in output["issues"][0].detail


def test_mapping_validate_reports_dangling_groups():
    mapping = CategoryMapping(Attribute.TECHNIQUE, groups={"incision": "INCISION"}, codes={}, misc_category="OTROS")
    problems = mapping.validate()
    assert len(problems) == 2


def test_check_counts(encoder):
    records = [
        RawRecord(ref_hesperia="1", material="PIEDRA", medium="ESTELA"),
        RawRecord(ref_hesperia="2", material="CALIZA", medium="ARA"),
        RawRecord(ref_hesperia="3", material="PLOMO"),
    ]
    observed = encoder.distinct_categories(records)
    assert observed[Attribute.MATERIAL] == 2
    assert observed[Attribute.MEDIUM] == 2
    assert observed[Attribute.SIGNARY] == 0
    assert check_counts(observed, {Attribute.MATERIAL: 2, Attribute.MEDIUM: 2}) == []
    assert check_counts(observed, {Attribute.MATERIAL: 12}) == ["MATERIAL: 2 distinct categories, expected 12"]
