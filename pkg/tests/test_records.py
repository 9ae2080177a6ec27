import pytest
from pydantic import ValidationError

from src.models.records import (
    OUTPUT_COLUMNS,
    RAW_COLUMNS,
    Authenticity,
    ProcessedRecord,
    RawRecord,
    parse_authenticity,
    validate_corpus,
    validate_record,
)

PUBLISHED_HEADER = (
    "site,refMLH,refHesperia,text,municipality,province,material,medium,writing_direction,"
    "technique,signary,dual_system,separators,dating,municipality_latitude,municipality_longitude,"
    "province_latitude,province_longitude,dating_min,dating_max,dating_mean,dating_width,clean_text,"
    "material_cat,material_cat_code,medium_cat,medium_cat_code,writing_direction_cat_code,"
    "technique_cat,technique_cat_code,signary_cat,signary_cat_code,dual_system_cat,dual_system_cat_code,"
    "separators_cat,separators_cat_code"
)


def test_output_columns_follow_published_order():
    assert ",".join(OUTPUT_COLUMNS) == PUBLISHED_HEADER
    assert len(OUTPUT_COLUMNS) == 36
    assert "writing_direction_cat" not in OUTPUT_COLUMNS
    assert "authenticity" not in OUTPUT_COLUMNS


def test_raw_columns_are_the_fourteen_attributes_plus_authenticity():
    assert len(RAW_COLUMNS) == 15
    assert RAW_COLUMNS[:3] == ["site", "refMLH", "refHesperia"]
    assert RAW_COLUMNS[-1] == "authenticity"


def test_raw_record_accepts_wire_and_python_names(golden_record):
    assert golden_record.ref_mlh == "F.11.30"
    assert golden_record.ref_hesperia == "V.04.50"
    assert golden_record.authenticity is Authenticity.GENUINE

    by_name = RawRecord(ref_hesperia="X.1", text="abc")
    assert by_name.ref_hesperia == "X.1"


def test_blank_optional_attributes_are_absent():
    record = RawRecord.model_validate({"refHesperia": "X.1", "material": "  ", "dating": ""})
    assert record.material is None
    assert record.dating is None
    assert record.text == ""


@pytest.mark.parametrize(
    "mark, expected",
    [
        (None, Authenticity.GENUINE),
        ("", Authenticity.GENUINE),
        ("FALSA", Authenticity.FALSE),
        ("falso", Authenticity.FALSE),
        ("SUSPICIOUS", Authenticity.SUSPICIOUS),
        ("Sospechosa", Authenticity.SUSPICIOUS),
        ("Auténtica", Authenticity.GENUINE),
    ],
)
def test_parse_authenticity(mark, expected):
    assert parse_authenticity(mark) is expected


def test_unknown_authenticity_mark_is_rejected():
    with pytest.raises(ValueError):
        parse_authenticity("DUDOSA")
    with pytest.raises(ValidationError):
        RawRecord.model_validate({"refHesperia": "X.1", "authenticity": "DUDOSA"})


def test_processed_record_rejects_inverted_dating():
    with pytest.raises(ValidationError):
        ProcessedRecord(ref_hesperia="X.1", dating="x", dating_min=10.0, dating_max=-10.0)


def test_processed_record_rejects_inconsistent_mean():
    with pytest.raises(ValidationError):
        ProcessedRecord(
            ref_hesperia="X.1", dating_min=-200.0, dating_max=-50.0, dating_mean=-100.0, dating_width=150.0
        )


def test_processed_record_rejects_code_without_source():
    with pytest.raises(ValidationError):
        ProcessedRecord(ref_hesperia="X.1", material_cat="PIEDRA", material_cat_code=2)


def test_processed_record_rejects_category_without_code():
    with pytest.raises(ValidationError):
        ProcessedRecord(ref_hesperia="X.1", material="PIEDRA", material_cat="PIEDRA")


def test_processed_record_rejects_negative_code():
    with pytest.raises(ValidationError):
        ProcessedRecord(ref_hesperia="X.1", medium="x", medium_cat="X", medium_cat_code=-1)


def test_validate_record_flags_empty_identifier():
    assert validate_record(RawRecord(text="abc")) == ["ref_hesperia empty"]
    assert validate_record(RawRecord(ref_hesperia="V.04.50")) == []


def test_validate_corpus_reports_duplicates_and_positions():
    records = [
        RawRecord(ref_hesperia="V.04.50"),
        RawRecord(ref_hesperia=""),
        RawRecord(ref_hesperia="V.04.50"),
    ]
    violations = validate_corpus(records)
    assert "record 2: ref_hesperia empty" in violations
    assert "ref_hesperia duplicated: V.04.50 (2 records)" in violations
    assert len(violations) == 2
