"""Problem definition readers"""
import io
import json
import os

from typing import Optional  # noqa

from polyseep.exceptions import ModelError, SchemaError
from polyseep.ingest.deck import deck_to_model, parse_inp  # noqa
from polyseep.ingest.native import (  # noqa
    dump_model,
    model_from_dict,
    parse_native_model,
    serialize_model,
)
from polyseep.model import SeepageModel  # noqa


def _read(path):
    # type: (str) -> str
    try:
        with io.open(path, encoding="utf8") as f:
            return f.read()
    except (IOError, OSError) as ex:
        raise ModelError("Can not read {}: {}".format(path, ex))


def load_model(path, overlay_path=None):
    # type: (str, Optional[str]) -> SeepageModel
    """Load a native model file, or an input deck plus JSON overlay"""
    if os.path.splitext(path)[1].lower() == ".inp":
        overlay = {}
        if overlay_path:
            try:
                overlay = json.loads(_read(overlay_path))
            except ValueError as ex:
                raise SchemaError("Invalid overlay JSON: {}".format(ex))
        return deck_to_model(parse_inp(_read(path)), overlay)
    if overlay_path:
        raise ModelError("An overlay only applies to input decks")
    return parse_native_model(_read(path))
