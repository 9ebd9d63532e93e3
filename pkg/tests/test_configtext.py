import pytest

from witnesszone.configtext import (
    ConfigSyntaxError,
    emit_config,
    meters,
    parse_config_text,
    seconds,
)

SAMPLE = """\
# comment line
name: demo
count: 4
ratio: 0.5
enabled: true
interval: 2s
nested:
    inner: 20m
    deeper:
        flag: false
items:
    - one
    - 2
    - three four
"""


def test_parse_nested_document():
    doc = parse_config_text(SAMPLE)
    assert doc["name"] == "demo"
    assert doc["count"] == 4
    assert doc["ratio"] == 0.5
    assert doc["enabled"] is True
    assert doc["interval"] == "2s"
    assert doc["nested"]["inner"] == "20m"
    assert doc["nested"]["deeper"]["flag"] is False
    assert doc["items"] == ["one", 2, "three four"]


def test_round_trip_through_emit():
    doc = parse_config_text(SAMPLE)
    assert parse_config_text(emit_config(doc)) == doc


@pytest.mark.parametrize(
    "text",
    [
        "",
        "  indented: 1",
        "key without colon",
        "a: 1\na: 2",
        "a:\n    - x\n    y: 2",
        "a:\n\t- x",
        "a:",
        "bad key!: 1",
    ],
)
def test_syntax_errors(text):
    with pytest.raises(ConfigSyntaxError):
        parse_config_text(text)


def test_error_carries_line_number():
    with pytest.raises(ConfigSyntaxError) as err:
        parse_config_text("ok: 1\nbroken line\n")
    assert err.value.line_no == 2


def test_unit_coercions():
    assert seconds("2s") == 2.0
    assert seconds(1.5) == 1.5
    assert meters("20m") == 20.0
    assert meters(21.425) == 21.425
    with pytest.raises(ValueError):
        seconds("20m")
    with pytest.raises(ValueError):
        meters("2s")
    with pytest.raises(ValueError):
        meters(True)
