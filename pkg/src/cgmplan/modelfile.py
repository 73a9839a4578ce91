"""Line-oriented text format for goal models.

Layout rules: `#` starts a comment outside quoted strings, blank lines
are ignored, nesting is by indentation (spaces only, tabs rejected),
and the first meaningful line must be `format_version: 1`.

    format_version: 1

    contexts:
      C5: a mobile data connection is available

    goal root "emergencies are handled" and actor MPERS
      goal locate "the patient is located" or when C5
        interpretation
          when true: errorMeters < 500, timeSeconds < 120
          when C5: errorMeters < 20, timeSeconds < 120
        task gpsLock "read the GPS position"
          provided
            when C5: errorMeters = 10
            when true: errorMeters = 30

A node header is `goal|task|delegation ID ["label"] [and|or]
[actor NAME] [when EXPR]`; the `when` clause comes last because the
expression runs to the end of the line.  Conditions follow

    expr   := term ('or' term)*
    term   := factor ('and' factor)*
    factor := 'not' factor | '(' expr ')' | LABEL | 'true'

Parsing is total: any input string produces either a model or a
ParseError with a line number, never another exception.  Semantic
rules (declared contexts, decomposition presence and so on) are not
the parser's job; run validate_model on the result.

Serialization is canonical: two-space indents, interpretation before
provided before children, `when true` omitted on node headers but
explicit on rows, numbers printed as ints when integral.  Parsing a
serialized model rebuilds it exactly; comments are not preserved.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .model import (
    TRUE,
    And,
    Atom,
    CgmModel,
    Comparison,
    Condition,
    ContextLabel,
    Decomposition,
    Interpretation,
    InterpretationRow,
    NodeKind,
    Not,
    Or,
    ProvidedQuality,
    ProvidedRow,
    QualityConstraint,
    RefinementNode,
    format_number,
    validate_model,
)

FORMAT_VERSION = 1

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
_KEYWORDS = frozenset(("and", "or", "not", "true"))
_CONSTRAINT_RE = re.compile(
    r"\s*([A-Za-z][A-Za-z0-9_]*)\s*(<=|>=|<|>)\s*([^\s,]+)\s*\Z"
)
_PROVIDED_RE = re.compile(r"\s*([A-Za-z][A-Za-z0-9_]*)\s*=\s*(\S+)\s*\Z")
_COMPARISON_OF = {
    "<": Comparison.LESS_THAN,
    "<=": Comparison.LESS_OR_EQUAL,
    ">": Comparison.GREATER_THAN,
    ">=": Comparison.GREATER_OR_EQUAL,
}
_MAX_EXPR_DEPTH = 200


class ParseError(Exception):
    """Syntax error with a 1-based line number (0 = whole document)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line

    def __str__(self) -> str:
        if self.line > 0:
            return f"line {self.line}: {self.message}"
        return self.message


# ---------------------------------------------------------------------------
# Low-level scanning
# ---------------------------------------------------------------------------


def _strip_comment(raw: str, line: int) -> str:
    """Cut a trailing comment, honouring quoted strings; reject tabs."""

    out = []
    in_quotes = False
    escaped = False
    for ch in raw:
        if ch == "\t" and not in_quotes:
            raise ParseError("tab characters are not allowed outside quotes", line)
        if in_quotes:
            out.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_quotes = False
            continue
        if ch == "#":
            break
        if ch == '"':
            in_quotes = True
        out.append(ch)
    return "".join(out)


class _Cursor:
    """Token scanner over one header line."""

    def __init__(self, text: str, line: int):
        self.text = text
        self.line = line
        self.i = 0

    def _skip_ws(self) -> None:
        while self.i < len(self.text) and self.text[self.i] == " ":
            self.i += 1

    def at_end(self) -> bool:
        self._skip_ws()
        return self.i >= len(self.text)

    def peek_quote(self) -> bool:
        self._skip_ws()
        return self.i < len(self.text) and self.text[self.i] == '"'

    def word(self) -> str | None:
        self._skip_ws()
        j = self.i
        while j < len(self.text) and self.text[j] not in ' "':
            j += 1
        if j == self.i:
            return None
        word = self.text[self.i : j]
        self.i = j
        return word

    def rest(self) -> str:
        self._skip_ws()
        out = self.text[self.i :]
        self.i = len(self.text)
        return out

    def quoted(self) -> str:
        self._skip_ws()
        if self.i >= len(self.text) or self.text[self.i] != '"':
            raise ParseError("expected a quoted label", self.line)
        self.i += 1
        out: list[str] = []
        while self.i < len(self.text):
            ch = self.text[self.i]
            self.i += 1
            if ch == "\\":
                if self.i >= len(self.text):
                    break
                esc = self.text[self.i]
                self.i += 1
                if esc in ('"', "\\"):
                    out.append(esc)
                else:
                    raise ParseError(f"unknown escape sequence \\{esc}", self.line)
            elif ch == '"':
                return "".join(out)
            else:
                out.append(ch)
        raise ParseError("unterminated quoted label", self.line)


# ---------------------------------------------------------------------------
# Conditions, constraints, numbers
# ---------------------------------------------------------------------------


def parse_condition(text: str, line: int = 0) -> Condition:
    """Parse a condition expression; see the module grammar."""

    tokens: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == " ":
            i += 1
            continue
        if ch in "()":
            tokens.append(ch)
            i += 1
            continue
        m = re.match(r"[A-Za-z][A-Za-z0-9_]*", text[i:])
        if m is None:
            raise ParseError(f"unexpected character {ch!r} in condition", line)
        tokens.append(m.group(0))
        i += len(m.group(0))
    if not tokens:
        raise ParseError("empty condition expression", line)

    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_or(depth: int) -> Condition:
        parts = [parse_and(depth)]
        while peek() == "or":
            take()
            parts.append(parse_and(depth))
        return parts[0] if len(parts) == 1 else Or(*parts)

    def parse_and(depth: int) -> Condition:
        parts = [parse_factor(depth)]
        while peek() == "and":
            take()
            parts.append(parse_factor(depth))
        return parts[0] if len(parts) == 1 else And(*parts)

    def parse_factor(depth: int) -> Condition:
        if depth > _MAX_EXPR_DEPTH:
            raise ParseError("condition expression nested too deeply", line)
        tok = peek()
        if tok is None:
            raise ParseError("condition expression ends unexpectedly", line)
        if tok == "not":
            take()
            return Not(parse_factor(depth + 1))
        if tok == "(":
            take()
            inner = parse_or(depth + 1)
            if peek() != ")":
                raise ParseError("missing closing parenthesis in condition", line)
            take()
            return inner
        if tok == "true":
            take()
            return TRUE
        if tok == ")":
            raise ParseError("unbalanced closing parenthesis in condition", line)
        if tok in _KEYWORDS:
            raise ParseError(f"unexpected keyword {tok!r} in condition", line)
        take()
        return Atom(tok)

    result = parse_or(0)
    if pos != len(tokens):
        raise ParseError(f"unexpected token {tokens[pos]!r} after condition", line)
    return result


def _parse_number(token: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"number out of range: {token!r}", line)
    return value


def parse_quality_constraint(text: str, line: int = 0) -> QualityConstraint:
    """Parse one `metric < number` style constraint."""

    m = _CONSTRAINT_RE.match(text)
    if m is None:
        raise ParseError(
            f"expected 'metric </<=/>/>= number', got {text.strip()!r}", line
        )
    metric, op, number = m.groups()
    return QualityConstraint(metric, _COMPARISON_OF[op], _parse_number(number, line))


def _split_when_row(content: str, line: int) -> tuple[Condition, str]:
    head, sep, rhs = content.partition(":")
    if not sep:
        raise ParseError("expected ':' after the row condition", line)
    head = head.strip()
    if head != "when" and not head.startswith("when "):
        raise ParseError("rows start with 'when <condition>:'", line)
    expr = head[4:].strip()
    if not expr:
        raise ParseError("missing condition after 'when'", line)
    return parse_condition(expr, line), rhs


# ---------------------------------------------------------------------------
# Document parsing
# ---------------------------------------------------------------------------


@dataclass
class _NodeFrame:
    line: int
    indent: int
    kind: NodeKind
    node_id: str
    label: str
    decomposition: Decomposition | None
    actor: str | None
    when: Condition
    parent: "_NodeFrame | None"
    body_indent: int | None = None
    interp_rows: list[InterpretationRow] | None = None
    provided_rows: list[ProvidedRow] | None = None
    children: list[RefinementNode] = field(default_factory=list)


@dataclass
class _SectionFrame:
    line: int
    indent: int
    kind: str  # "contexts", "interpretation", "provided"
    node: _NodeFrame | None = None
    body_indent: int | None = None


def _parse_node_header(content: str, line: int, parent: _NodeFrame | None, indent: int) -> _NodeFrame:
    cur = _Cursor(content, line)
    kind_word = cur.word()
    kind = NodeKind(kind_word)
    node_id = cur.word()
    if node_id is None:
        raise ParseError(f"expected a node id after '{kind_word}'", line)
    if _IDENT_RE.match(node_id) is None:
        raise ParseError(f"invalid node id {node_id!r}", line)
    label = cur.quoted() if cur.peek_quote() else ""
    decomposition: Decomposition | None = None
    actor: str | None = None
    when: Condition = TRUE
    while True:
        if cur.peek_quote():
            raise ParseError("unexpected quoted string in node header", line)
        word = cur.word()
        if word is None:
            break
        if word in ("and", "or"):
            if decomposition is not None:
                raise ParseError("decomposition given twice", line)
            decomposition = Decomposition(word)
        elif word == "actor":
            name = cur.word()
            if name is None:
                raise ParseError("expected an actor name after 'actor'", line)
            if _IDENT_RE.match(name) is None:
                raise ParseError(f"invalid actor name {name!r}", line)
            actor = name
        elif word == "when":
            expr = cur.rest()
            if not expr.strip():
                raise ParseError("missing condition after 'when'", line)
            when = parse_condition(expr, line)
            break
        else:
            raise ParseError(f"unexpected token {word!r} in node header", line)
    return _NodeFrame(
        line=line,
        indent=indent,
        kind=kind,
        node_id=node_id,
        label=label,
        decomposition=decomposition,
        actor=actor,
        when=when,
        parent=parent,
    )


def _finalize_node(frame: _NodeFrame, roots: list[RefinementNode]) -> None:
    provided: ProvidedQuality | None = None
    if frame.provided_rows is not None:
        provided = ProvidedQuality(tuple(frame.provided_rows))
    elif frame.kind is not NodeKind.GOAL:
        provided = ProvidedQuality(())
    interpretation: Interpretation | None = None
    if frame.interp_rows is not None:
        interpretation = Interpretation(tuple(frame.interp_rows))
    node = RefinementNode(
        id=frame.node_id,
        kind=frame.kind,
        label=frame.label,
        applicability=frame.when,
        decomposition=frame.decomposition,
        children=tuple(frame.children),
        interpretation=interpretation,
        provided=provided,
        actor=frame.actor,
    )
    if frame.parent is None:
        roots.append(node)
    else:
        frame.parent.children.append(node)


def parse_model(text: str) -> CgmModel:
    """Parse a model document; ParseError on any syntax problem."""

    rows: list[tuple[int, int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        clean = _strip_comment(raw, lineno)
        stripped = clean.strip()
        if not stripped:
            continue
        indent = len(clean) - len(clean.lstrip(" "))
        rows.append((lineno, indent, stripped))

    if not rows:
        raise ParseError("empty document: expected 'format_version: 1'")
    first_line, first_indent, first_text = rows[0]
    head, sep, version_text = first_text.partition(":")
    if first_indent != 0 or head.strip() != "format_version" or not sep:
        raise ParseError("the first line must be 'format_version: 1'", first_line)
    if version_text.strip() != str(FORMAT_VERSION):
        raise ParseError(
            f"unsupported format version {version_text.strip()!r}", first_line
        )

    contexts: list[ContextLabel] = []
    contexts_seen = False
    roots: list[RefinementNode] = []
    root_frames = 0
    stack: list[_NodeFrame | _SectionFrame] = []

    def close(frame: _NodeFrame | _SectionFrame) -> None:
        if isinstance(frame, _NodeFrame):
            _finalize_node(frame, roots)

    for lineno, indent, content in rows[1:]:
        while stack and indent <= stack[-1].indent:
            close(stack.pop())

        if stack:
            top = stack[-1]
            if top.body_indent is None:
                top.body_indent = indent
            elif indent != top.body_indent:
                raise ParseError("inconsistent indentation", lineno)
        top = stack[-1] if stack else None

        first_word = content.split(" ", 1)[0].split(":", 1)[0]

        if top is None:
            if content == "contexts:":
                if contexts_seen:
                    raise ParseError("duplicate 'contexts:' section", lineno)
                contexts_seen = True
                stack.append(_SectionFrame(lineno, indent, "contexts"))
                continue
            if first_word in ("goal", "task", "delegation"):
                root_frames += 1
                if root_frames > 1:
                    raise ParseError("a model has exactly one root node", lineno)
                stack.append(_parse_node_header(content, lineno, None, indent))
                continue
            raise ParseError(
                f"expected 'contexts:' or a node header, got {content!r}", lineno
            )

        if isinstance(top, _SectionFrame):
            if top.kind == "contexts":
                name, sep, description = content.partition(":")
                name = name.strip()
                if not sep:
                    raise ParseError("expected 'NAME: description'", lineno)
                if _IDENT_RE.match(name) is None:
                    raise ParseError(f"invalid context name {name!r}", lineno)
                contexts.append(ContextLabel(name, description.strip()))
                continue
            condition, rhs = _split_when_row(content, lineno)
            if top.kind == "interpretation":
                constraints = []
                for part in rhs.split(","):
                    if not part.strip():
                        raise ParseError("empty constraint in row", lineno)
                    constraints.append(parse_quality_constraint(part, lineno))
                if not constraints:
                    raise ParseError("interpretation row has no constraints", lineno)
                assert top.node is not None and top.node.interp_rows is not None
                top.node.interp_rows.append(
                    InterpretationRow(condition, tuple(constraints))
                )
            else:
                m = _PROVIDED_RE.match(rhs)
                if m is None:
                    raise ParseError(
                        f"expected 'metric = number', got {rhs.strip()!r}", lineno
                    )
                metric, number = m.groups()
                assert top.node is not None and top.node.provided_rows is not None
                top.node.provided_rows.append(
                    ProvidedRow(condition, metric, _parse_number(number, lineno))
                )
            continue

        # Inside a node body.
        if content == "interpretation":
            if top.interp_rows is not None:
                raise ParseError("'interpretation' block given twice", lineno)
            top.interp_rows = []
            stack.append(_SectionFrame(lineno, indent, "interpretation", node=top))
            continue
        if content == "provided":
            if top.provided_rows is not None:
                raise ParseError("'provided' block given twice", lineno)
            top.provided_rows = []
            stack.append(_SectionFrame(lineno, indent, "provided", node=top))
            continue
        if first_word in ("goal", "task", "delegation"):
            stack.append(_parse_node_header(content, lineno, top, indent))
            continue
        raise ParseError(
            f"expected 'interpretation', 'provided' or a child node, got {content!r}",
            lineno,
        )

    while stack:
        close(stack.pop())

    if not roots:
        raise ParseError("model has no root node")
    return CgmModel(contexts=tuple(contexts), root=roots[0])


def load_model(path: str | Path) -> CgmModel:
    """Read and parse a model file (UTF-8)."""

    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise ParseError(f"{path}: file is not valid UTF-8") from None
    return parse_model(text)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _quote(label: str) -> str:
    if "\n" in label:
        raise ValueError("labels cannot contain newlines")
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_model(model: CgmModel, *, validate: bool = True) -> str:
    """Render a model in canonical form; the inverse of parse_model."""

    if validate:
        violations = validate_model(model)
        if violations:
            raise ValueError(f"cannot serialize an invalid model: {violations[0]}")
    lines: list[str] = [f"format_version: {FORMAT_VERSION}", ""]
    if model.contexts:
        lines.append("contexts:")
        for ctx in model.contexts:
            if "#" in ctx.description or "\n" in ctx.description:
                raise ValueError("context descriptions cannot contain '#' or newlines")
            lines.append(f"  {ctx.name}: {ctx.description}".rstrip())
        lines.append("")

    # Deep chains are legal models; recursion tracks tree depth.
    limit = sys.getrecursionlimit()
    needed = 4 * model.depth + 200
    if needed > limit:
        sys.setrecursionlimit(needed)
    try:
        _write_node(model.root, 0, lines)
    finally:
        if needed > limit:
            sys.setrecursionlimit(limit)
    return "\n".join(lines) + "\n"


def write_model(model: CgmModel, path: str | Path) -> None:
    Path(path).write_text(serialize_model(model), encoding="utf-8")


def _write_node(node: RefinementNode, depth: int, lines: list[str]) -> None:
    pad = "  " * depth
    parts = [str(node.kind), node.id]
    if node.label:
        parts.append(_quote(node.label))
    if node.decomposition is not None:
        parts.append(str(node.decomposition))
    if node.actor is not None:
        parts.append(f"actor {node.actor}")
    if node.applicability != TRUE:
        parts.append(f"when {node.applicability}")
    lines.append(pad + " ".join(parts))

    inner = "  " * (depth + 1)
    rowpad = "  " * (depth + 2)
    if node.interpretation is not None:
        lines.append(inner + "interpretation")
        for row in node.interpretation.rows:
            cells = []
            for qc in row.constraints:
                if qc.applicable != TRUE:
                    raise ValueError(
                        "row constraints are gated by the row condition; "
                        "per-constraint conditions are not representable"
                    )
                cells.append(
                    f"{qc.metric} {qc.comparison} {format_number(qc.threshold)}"
                )
            lines.append(f"{rowpad}when {row.condition}: " + ", ".join(cells))
    if node.provided is not None and node.provided.rows:
        lines.append(inner + "provided")
        for prow in node.provided.rows:
            lines.append(
                f"{rowpad}when {prow.condition}: {prow.metric} = {format_number(prow.value)}"
            )
    for child in node.children:
        _write_node(child, depth + 1, lines)
