"""Bindings for the nullstate symbolic machine, network and scenarios."""

import json

from ._nullstate import (
    CodecError,
    decode_input,
    default_table,
    dispatch,
    encode_input,
    f_square,
    f_verb,
    functionality,
    oracle_answer,
    predict,
    scenario_json,
    scenario_names,
    train_square,
    version,
)


def run_scenario(name, seed=1):
    """Run a named scenario and return its report as a dict."""
    return json.loads(scenario_json(name, seed))


__all__ = [
    "CodecError",
    "decode_input",
    "default_table",
    "dispatch",
    "encode_input",
    "f_square",
    "f_verb",
    "functionality",
    "oracle_answer",
    "predict",
    "run_scenario",
    "scenario_names",
    "train_square",
    "version",
]
