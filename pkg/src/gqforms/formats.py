"""JSON and shorthand formats for forms and elements."""
import json
from fractions import Fraction

from .errors import InvalidInput
from .field import FieldElement, format_element, parse_element
from .forms import GQF, make_diagonal


def element_from_json(field, obj, path="value"):
    """Accept a coordinate array of rational strings, a number, or an element string."""
    try:
        if isinstance(obj, list):
            if len(obj) != field.degree:
                raise InvalidInput(f"{path}: expected {field.degree} coordinates, got {len(obj)}")
            coords = []
            for k, c in enumerate(obj):
                try:
                    coords.append(Fraction(str(c)))
                except (ValueError, ZeroDivisionError) as exc:
                    raise InvalidInput(f"{path}[{k}]: not a rational: {c!r}") from exc
            return FieldElement(field, coords)
        if isinstance(obj, int):
            return field(obj)
        if isinstance(obj, str):
            return parse_element(field, obj)
    except InvalidInput as exc:
        msg = str(exc)
        raise InvalidInput(msg if msg.startswith(path) else f"{path}: {msg}") from exc
    raise InvalidInput(f"{path}: unsupported element value {obj!r}")


def gqf_to_json(F):
    coeffs = [{"i": i, "j": j, "tau": t, "tau'": u, "value": c.to_json()}
              for (i, t, j, u), c in sorted(F.coeffs.items()) if (i, t) <= (j, u)]
    return {"n": F.n, "coeffs": coeffs}


def gqf_from_json(field, obj):
    """Sparse coefficient list (0-based indices) or the diagonal shorthand {a, b, tau}."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise InvalidInput("form: expected a JSON object")
    if "a" in obj:
        return diagonal_from_json(field, obj)
    if "n" not in obj or "coeffs" not in obj:
        raise InvalidInput("form: missing key 'n' or 'coeffs'")
    try:
        n = int(obj["n"])
    except (TypeError, ValueError) as exc:
        raise InvalidInput("form.n: not an integer") from exc
    if n < 1:
        raise InvalidInput("form.n: must be positive")
    entries = {}
    if not isinstance(obj["coeffs"], list):
        raise InvalidInput("form.coeffs: expected a list")
    for idx, rec in enumerate(obj["coeffs"]):
        path = f"coeffs[{idx}]"
        if not isinstance(rec, dict):
            raise InvalidInput(f"{path}: expected an object")
        try:
            i, j = int(rec["i"]), int(rec["j"])
            t = int(rec.get("tau", 0))
            u = int(rec.get("tau'", rec.get("tau2", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"{path}: bad or missing index ({exc})") from exc
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidInput(f"{path}: variable index out of range 0..{n - 1}")
        if not (0 <= t < field.degree and 0 <= u < field.degree):
            raise InvalidInput(f"{path}: automorphism index out of range 0..{field.degree - 1}")
        if "value" not in rec:
            raise InvalidInput(f"{path}: missing 'value'")
        val = element_from_json(field, rec["value"], f"{path}.value")
        key = (i, t, j, u)
        if key in entries and entries[key] != val:
            raise InvalidInput(f"{path}: conflicting duplicate entry")
        entries[key] = val
    try:
        return GQF(field, n, entries)
    except InvalidInput as exc:
        raise InvalidInput(f"form: {exc}") from exc


def diagonal_from_json(field, obj):
    try:
        a = [element_from_json(field, x, f"a[{k}]") for k, x in enumerate(obj["a"])]
        b = [element_from_json(field, x, f"b[{k}]") for k, x in enumerate(obj.get("b", []))]
        tau = int(obj.get("tau", 1))
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"diagonal form: {exc}") from exc
    return make_diagonal(field, a, b, tau)


def parse_diagonal_shorthand(field, text):
    """``a=1,1;b=1`` or ``a=1,1;b=1;tau=1``; entries are element strings."""
    parts = {}
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise InvalidInput(f"shorthand part {chunk!r} lacks '='")
        key, val = chunk.split("=", 1)
        parts[key.strip()] = val.strip()
    if "a" not in parts:
        raise InvalidInput("shorthand needs a=...")
    a = [parse_element(field, x) for x in parts["a"].split(",") if x.strip()]
    b = [parse_element(field, x) for x in parts.get("b", "").split(",") if x.strip()]
    tau = int(parts.get("tau", 1))
    return make_diagonal(field, a, b, tau)


def load_form(field, spec):
    """A form from a JSON string, a path to a JSON file, or diagonal shorthand."""
    s = spec.strip()
    if s.startswith("{"):
        try:
            obj = json.loads(s)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"form: invalid JSON ({exc})") from exc
        return gqf_from_json(field, obj)
    if s.startswith("a="):
        return parse_diagonal_shorthand(field, s)
    try:
        with open(s) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read form file {s!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"form file {s!r}: invalid JSON ({exc})") from exc
    return gqf_from_json(field, obj)


def element_text(x):
    return format_element(x)
