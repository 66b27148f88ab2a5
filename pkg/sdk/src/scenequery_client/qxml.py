"""Query XML to plain nested data.

The SDK carries no evaluation engine; it re-parses the server's canonical
query documents into dictionaries so callers can walk them with whatever
inference stack they bring. Entity references are reported verbatim: a name
is a quantified variable exactly when some enclosing ``exists``/``forall``/
``count`` node binds it.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

_CONNECTIVES = {"and", "or", "not", "exists", "forall", "count"}
_WRAPPERS = {"define", "what", "when", "where"}


class QueryParseError(ValueError):
    pass


def _time_from(el: ET.Element) -> dict:
    if el.tag == "time":
        if el.get("camera") is not None:
            return {
                "type": "view_frame",
                "camera": el.get("camera"),
                "frame": int(el.get("frame", "0")),
            }
        if el.get("t") is not None:
            return {"type": "scene_time", "seconds": float(el.get("t", "0"))}
        text = (el.text or "").strip()
        if ":" in text:
            cam, _, frame = text.partition(":")
            return {"type": "view_frame", "camera": cam, "frame": int(frame)}
        return {"type": "scene_time", "seconds": float(text)}
    if el.get("camera") is not None:
        return {
            "type": "view_interval",
            "camera": el.get("camera"),
            "start": int(el.get("start", "0")),
            "end": int(el.get("end", "0")),
        }
    return {
        "type": "scene_interval",
        "start": float(el.get("start", "0")),
        "end": float(el.get("end", "0")),
    }


def _location_from(el: ET.Element) -> dict:
    out: dict = {}
    if el.get("camera") is not None:
        out["frame_of_reference"] = {"type": "view", "camera": el.get("camera")}
    else:
        out["frame_of_reference"] = {"type": "scene", "system": el.get("cs")}
    if el.get("x") is not None:
        out["shape"] = {
            "type": "point",
            "x": float(el.get("x", "0")),
            "y": float(el.get("y", "0")),
        }
    else:
        out["shape"] = {
            "type": "box",
            "x1": float(el.get("x1", "0")),
            "y1": float(el.get("y1", "0")),
            "x2": float(el.get("x2", "0")),
            "y2": float(el.get("y2", "0")),
        }
    return out


def _formula_from(el: ET.Element) -> dict:
    tag = el.tag
    if tag in ("and", "or"):
        return {"node": tag, "children": [_formula_from(c) for c in el]}
    if tag == "not":
        children = list(el)
        if len(children) != 1:
            raise QueryParseError("<not> needs one child")
        return {"node": "not", "child": _formula_from(children[0])}
    if tag in ("exists", "forall"):
        children = list(el)
        if len(children) != 1:
            raise QueryParseError(f"<{tag}> needs one child")
        return {
            "node": tag,
            "var": el.get("var"),
            "child": _formula_from(children[0]),
        }
    if tag == "count":
        children = list(el)
        if len(children) != 1:
            raise QueryParseError("<count> needs one child")
        return {
            "node": "count",
            "var": el.get("var"),
            "op": el.get("op"),
            "rhs": int(el.get("rhs", "0")),
            "child": _formula_from(children[0]),
        }
    atom: dict = {"node": "atom", "predicate": tag, "arguments": []}
    for child in el:
        if child.tag in ("time", "interval"):
            atom["time"] = _time_from(child)
        elif child.tag == "location":
            atom["location"] = _location_from(child)
        elif child.tag == "entity":
            atom["arguments"].append(
                {"kind": "entity", "name": (child.text or "").strip()}
            )
        elif child.tag == "value":
            atom["arguments"].append(
                {"kind": "value", "value": (child.text or "").strip()}
            )
        else:
            raise QueryParseError(f"unexpected <{child.tag}> inside <{tag}>")
    return atom


def parse_query(xml_text: str) -> dict:
    """Parse one canonical query document into plain nested dictionaries."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise QueryParseError(f"malformed query XML: {exc}") from None
    out: dict = {"id": root.get("id", "")}
    if root.tag == "define":
        children = list(root)
        if len(children) != 1:
            raise QueryParseError("<define> needs one body element")
        out["kind"] = "definition"
        out["defines_label"] = root.get("label")
        out["body"] = _formula_from(children[0])
        return out
    if root.tag in ("what", "when", "where"):
        children = list(root)
        if len(children) != 1:
            raise QueryParseError(f"<{root.tag}> needs one body element")
        out["kind"] = root.tag
        out["target"] = root.get("target")
        out["body"] = _formula_from(children[0])
        return out
    out["kind"] = "polar"
    out["body"] = _formula_from(root)
    return out
