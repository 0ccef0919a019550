"""Declaration-level Java source parser.

Extracts type and method/constructor declarations with their exact line spans
so each one can be tracked as a module across commits.  The parser is purely
syntactic: comments and string literals are masked out first, then a token
scan recovers the declaration structure from brace nesting.  Anonymous and
local classes are folded into their enclosing declaration; full semantic
analysis (imports, classpath, overload resolution) is deliberately absent.
"""

from __future__ import annotations

import logging
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from granite.gitrepo import FileSnapshot

log = logging.getLogger(__name__)

KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while record sealed permits
    var yield""".split()
)

MODIFIER_WORDS = frozenset(
    "public private protected static final abstract synchronized native "
    "transient volatile strictfp default sealed".split()
)

_TYPE_KEYWORDS = frozenset({"class", "interface", "enum"})

_WORD_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_TOKEN_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*|\d[0-9A-Za-z_.]*|\S")


# ---------------------------------------------------------------------------
# module identity


@dataclass(frozen=True)
class ModuleId:
    """Identity of a class or method module; file_path is the path at birth."""

    kind: str  # "class" | "method"
    file_path: str
    qualified_class: str
    method_name: Optional[str] = None
    param_types: Optional[Tuple[str, ...]] = None

    @property
    def sort_key(self):
        return (
            self.kind,
            self.file_path,
            self.qualified_class,
            self.method_name or "",
            ",".join(self.param_types or ()),
        )

    def __str__(self) -> str:
        if self.kind == "class":
            return f"class:{self.file_path}:{self.qualified_class}"
        params = ",".join(self.param_types or ())
        return f"method:{self.file_path}:{self.qualified_class}#{self.method_name}({params})"


def parse_module_id(text: str) -> ModuleId:
    """Inverse of str(ModuleId); paths containing ':' are unsupported."""
    kind, _, rest = text.partition(":")
    if kind == "class":
        path, _, qualified = rest.rpartition(":")
        return ModuleId("class", path, qualified)
    if kind == "method":
        loc, _, sig = rest.partition("#")
        path, _, qualified = loc.rpartition(":")
        name, _, params = sig.partition("(")
        params = params.rstrip(")")
        types = tuple(params.split(",")) if params else ()
        return ModuleId("method", path, qualified, name, types)
    raise ValueError(f"not a module id: {text!r}")


@dataclass(frozen=True)
class ModuleDef:
    """An extracted code segment: module identity plus its exact source lines."""

    id: ModuleId
    span: Tuple[int, int]  # 1-based inclusive line numbers
    body: Tuple[str, ...]


# ---------------------------------------------------------------------------
# masking and tokens


def mask_source(text: str) -> Tuple[str, List[int]]:
    """Blank out comments and string/char literals, preserving offsets.

    Returns the masked text (same length, newlines kept) and the start offsets
    of the string literals that were removed.
    """
    out = list(text)
    literals: List[int] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            j = n if j == -1 else j
            for k in range(i, j):
                out[k] = " "
            i = j
        elif ch == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            end = n if j == -1 else j + 2
            for k in range(i, end):
                if out[k] != "\n":
                    out[k] = " "
            i = end
        elif ch == '"' and text.startswith('"""', i):
            literals.append(i)
            j = text.find('"""', i + 3)
            end = n if j == -1 else j + 3
            for k in range(i, end):
                if out[k] != "\n":
                    out[k] = " "
            i = end
        elif ch == '"' or ch == "'":
            quote = ch
            if quote == '"':
                literals.append(i)
            j = i + 1
            while j < n:
                c = text[j]
                if c == "\\" and j + 1 < n:
                    j += 2
                    continue
                if c == quote or c == "\n":
                    break
                j += 1
            end = j + 1 if j < n and text[j] == quote else min(j, n)
            for k in range(i, min(end, n)):
                if out[k] != "\n":
                    out[k] = " "
            i = max(end, i + 1)
        else:
            i += 1
    return "".join(out), literals


@dataclass(frozen=True)
class _Tok:
    text: str
    start: int

    @property
    def is_word(self) -> bool:
        c = self.text[0]
        return c.isalpha() or c in "_$"


def _tokenize(masked: str) -> List[_Tok]:
    return [_Tok(m.group(), m.start()) for m in _TOKEN_RE.finditer(masked)]


def code_words(masked_fragment: str) -> List[str]:
    """Identifier-ish tokens of a masked code fragment (keywords included)."""
    return _WORD_RE.findall(masked_fragment)


# ---------------------------------------------------------------------------
# declaration structure


@dataclass
class MethodDecl:
    name: str
    param_types: Tuple[str, ...]
    modifiers: frozenset
    span: Tuple[int, int]
    start: int  # char offsets into the file
    end: int
    is_ctor: bool = False
    has_body: bool = False
    body_open: Optional[int] = None  # offset of '{', None for bodyless


@dataclass
class FieldDecl:
    names: Tuple[str, ...]
    modifiers: frozenset
    span: Tuple[int, int]


@dataclass
class TypeDecl:
    keyword: str  # class | interface | enum | record | @interface
    name: str
    qualified: str
    extends_name: Optional[str]
    implements: Tuple[str, ...]
    modifiers: frozenset
    span: Tuple[int, int]
    start: int
    end: int
    methods: List[MethodDecl] = field(default_factory=list)
    fields: List[FieldDecl] = field(default_factory=list)
    nested: List["TypeDecl"] = field(default_factory=list)


@dataclass
class ParsedFile:
    path: str
    lines: List[str]
    masked: str
    literal_offsets: List[int]
    line_starts: List[int]
    types: List[TypeDecl] = field(default_factory=list)
    error: Optional[str] = None

    def line_of(self, offset: int) -> int:
        return bisect_right(self.line_starts, offset)

    def all_types(self) -> List[TypeDecl]:
        out: List[TypeDecl] = []

        def walk(t: TypeDecl):
            out.append(t)
            for n in t.nested:
                walk(n)

        for t in self.types:
            walk(t)
        return out


class _ParseError(Exception):
    pass


class _Parser:
    def __init__(self, parsed: ParsedFile):
        self.pf = parsed
        self.toks = _tokenize(parsed.masked)
        self.i = 0

    # cursor helpers --------------------------------------------------------

    def peek(self, k: int = 0) -> Optional[_Tok]:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def advance(self) -> _Tok:
        if self.i >= len(self.toks):
            raise _ParseError("unexpected end of file")
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def skip_balanced(self, open_ch: str, close_ch: str) -> _Tok:
        """Cursor sits on open_ch; consume through the matching close_ch."""
        depth = 0
        while True:
            tok = self.advance()
            if tok.text == open_ch:
                depth += 1
            elif tok.text == close_ch:
                depth -= 1
                if depth == 0:
                    return tok

    def skip_annotation(self) -> bool:
        """Cursor on '@'. Consumes the annotation; False if this is '@interface'."""
        nxt = self.peek(1)
        if nxt is not None and nxt.text == "interface":
            return False
        self.advance()  # '@'
        if self.peek() is None or not self.peek().is_word:
            return True  # stray '@'; tolerate
        self.advance()
        while self.peek() and self.peek().text == "." and self.peek(1) and self.peek(1).is_word:
            self.advance()
            self.advance()
        if self.peek() and self.peek().text == "(":
            self.skip_balanced("(", ")")
        return True

    def _dotted_name(self) -> str:
        parts = [self.advance().text]
        while self.peek() and self.peek().text == "." and self.peek(1) and self.peek(1).is_word:
            self.advance()
            parts.append(self.advance().text)
        if self.peek() and self.peek().text == "<":
            self.skip_balanced("<", ">")
        return ".".join(parts)

    # grammar ---------------------------------------------------------------

    def parse_unit(self) -> List[TypeDecl]:
        types: List[TypeDecl] = []
        stmt_start: Optional[int] = None
        while self.peek() is not None:
            tok = self.peek()
            text = tok.text
            if text in ("package", "import"):
                while self.peek() is not None and self.advance().text != ";":
                    pass
                stmt_start = None
            elif text == "@":
                if stmt_start is None:
                    stmt_start = tok.start
                if not self.skip_annotation():
                    types.append(self._parse_type(stmt_start, (), at_interface=True))
                    stmt_start = None
            elif self._at_type_keyword():
                types.append(self._parse_type(stmt_start if stmt_start is not None else tok.start, ()))
                stmt_start = None
            elif text == ";":
                self.advance()
                stmt_start = None
            else:
                if stmt_start is None:
                    stmt_start = tok.start
                self.advance()
        return types

    def _at_type_keyword(self) -> bool:
        tok = self.peek()
        if tok is None or not tok.is_word:
            return False
        if tok.text in _TYPE_KEYWORDS:
            return True
        if tok.text == "record":
            # contextual keyword: only a declaration when followed by Name ( or Name <
            nxt, nxt2 = self.peek(1), self.peek(2)
            return (
                nxt is not None
                and nxt.is_word
                and nxt.text not in KEYWORDS
                and nxt2 is not None
                and nxt2.text in ("(", "<")
            )
        return False

    def _parse_type(self, decl_start: int, chain: Tuple[str, ...], at_interface: bool = False) -> TypeDecl:
        if at_interface:
            self.advance()  # '@'
            kw_tok = self.advance()  # 'interface'
            keyword = "@interface"
        else:
            kw_tok = self.advance()
            keyword = kw_tok.text
        name_tok = self.advance()
        if not name_tok.is_word:
            raise _ParseError(f"expected type name after {keyword!r}")
        name = name_tok.text
        if self.peek() and self.peek().text == "<":
            self.skip_balanced("<", ">")

        extends_name: Optional[str] = None
        implements: List[str] = []
        record_components: List[Tuple[str, Optional[str]]] = []
        mode = None
        while True:
            tok = self.peek()
            if tok is None:
                raise _ParseError(f"unterminated {keyword} {name}")
            if tok.text == "{":
                break
            if tok.text == ";" and keyword == "@interface":
                break  # tolerate odd files
            if tok.text == "(" and keyword == "record":
                record_components = self._parse_param_list()
                continue
            if tok.is_word and tok.text == "extends":
                mode = "extends"
                self.advance()
            elif tok.is_word and tok.text in ("implements", "permits"):
                mode = tok.text
                self.advance()
            elif tok.is_word and tok.text not in KEYWORDS:
                dotted = self._dotted_name()
                if mode == "extends" and extends_name is None:
                    extends_name = dotted
                elif mode in ("extends", "implements"):
                    implements.append(dotted)
            elif tok.text == "<":
                self.skip_balanced("<", ">")
            else:
                self.advance()

        open_tok = self.advance()  # '{'
        qualified = ".".join(chain + (name,))
        decl = TypeDecl(
            keyword=keyword,
            name=name,
            qualified=qualified,
            extends_name=extends_name,
            implements=tuple(implements),
            modifiers=self._modifiers_before(decl_start, kw_tok.start),
            span=(0, 0),
            start=decl_start,
            end=open_tok.start,
        )
        for comp_type, comp_name in record_components:
            if comp_name:
                decl.fields.append(
                    FieldDecl((comp_name,), frozenset({"private", "final"}), (0, 0))
                )
        if keyword == "enum":
            self._skip_enum_constants()
        close = self._parse_members(decl, chain + (name,))
        decl.end = close.start
        decl.span = (self.pf.line_of(decl.start), self.pf.line_of(decl.end))
        return decl

    def _modifiers_before(self, start: int, end: int) -> frozenset:
        frag = self.pf.masked[start:end]
        return frozenset(w for w in _WORD_RE.findall(frag) if w in MODIFIER_WORDS)

    def _skip_enum_constants(self) -> None:
        """Skip the constant section of an enum body (through ';' if present)."""
        depth = 0
        while True:
            tok = self.peek()
            if tok is None:
                raise _ParseError("unterminated enum body")
            if depth == 0 and tok.text == ";":
                self.advance()
                return
            if depth == 0 and tok.text == "}":
                return  # constants only; member loop closes the body
            if tok.text in ("{", "("):
                depth += 1
            elif tok.text in ("}", ")"):
                depth -= 1
            self.advance()

    def _parse_members(self, decl: TypeDecl, chain: Tuple[str, ...]) -> _Tok:
        member_start: Optional[int] = None
        pending: List[_Tok] = []

        def reset():
            nonlocal member_start, pending
            member_start = None
            pending = []

        while True:
            tok = self.peek()
            if tok is None:
                raise _ParseError(f"unterminated body of {decl.qualified}")
            text = tok.text
            if text == "}":
                return self.advance()
            if text == "@":
                if member_start is None:
                    member_start = tok.start
                if not self.skip_annotation():
                    decl.nested.append(
                        self._parse_type(member_start, chain, at_interface=True)
                    )
                    reset()
            elif self._at_type_keyword():
                if member_start is None:
                    member_start = tok.start
                decl.nested.append(self._parse_type(member_start, chain))
                reset()
            elif text == ";":
                semi = self.advance()
                if pending:
                    decl.fields.append(self._field_from_tokens(pending, member_start, semi.start))
                reset()
            elif text == "=":
                self.advance()
                names = []
                first = self._declarator_name(pending)
                if first:
                    names.append(first)
                end_off = self._skip_initializers(names)
                if names and member_start is not None:
                    decl.fields.append(
                        FieldDecl(
                            tuple(names),
                            self._modifier_set(pending),
                            (self.pf.line_of(member_start), self.pf.line_of(end_off)),
                        )
                    )
                reset()
            elif text == "(":
                method = self._parse_method(pending, member_start or tok.start, decl)
                if method is not None:
                    decl.methods.append(method)
                reset()
            elif text == "{":
                self.skip_balanced("{", "}")  # static/instance initializer block
                reset()
            else:
                if member_start is None:
                    member_start = tok.start
                pending.append(self.advance())

    def _modifier_set(self, toks: Sequence[_Tok]) -> frozenset:
        return frozenset(t.text for t in toks if t.is_word and t.text in MODIFIER_WORDS)

    def _declarator_name(self, toks: Sequence[_Tok]) -> Optional[str]:
        for t in reversed(toks):
            if t.is_word and t.text not in KEYWORDS:
                return t.text
        return None

    def _field_from_tokens(self, toks: List[_Tok], start: Optional[int], end: int) -> FieldDecl:
        # split declarators on commas outside (), <> and []
        names: List[str] = []
        depth = {"(": 0, "<": 0, "[": 0}
        seg: List[_Tok] = []
        for t in toks + [_Tok(",", end)]:
            c = t.text
            if c in "(<[":
                depth[c] += 1
            elif c == ")":
                depth["("] -= 1
            elif c == ">":
                depth["<"] = max(0, depth["<"] - 1)
            elif c == "]":
                depth["["] -= 1
            if c == "," and not any(depth.values()):
                name = self._declarator_name(seg)
                if name:
                    names.append(name)
                seg = []
            else:
                seg.append(t)
        span = (self.pf.line_of(start if start is not None else end), self.pf.line_of(end))
        return FieldDecl(tuple(names), self._modifier_set(toks), span)

    def _skip_initializers(self, names: List[str]) -> int:
        """After '=', consume through ';' collecting further declarator names."""
        depth = 0
        while True:
            tok = self.advance()
            c = tok.text
            if c in "({[":
                depth += 1
            elif c in ")}]":
                depth -= 1
            elif c == ";" and depth == 0:
                return tok.start
            elif c == "," and depth == 0:
                # either the next declarator or a comma inside a generic
                nxt, nxt2 = self.peek(), self.peek(1)
                if (
                    nxt is not None
                    and nxt.is_word
                    and nxt.text not in KEYWORDS
                    and nxt2 is not None
                    and nxt2.text in ("=", ",", ";", "[")
                ):
                    names.append(nxt.text)

    def _parse_method(self, pending: List[_Tok], start: int, decl: TypeDecl) -> Optional[MethodDecl]:
        name = None
        for t in reversed(pending):
            if t.is_word:
                name = t.text
                break
        params = self._parse_param_list()
        if name is None or name in KEYWORDS:
            # expression-looking construct at member level; resynchronize
            self._resync_member()
            return None
        end_tok, has_body, body_open = self._finish_method_header()
        span = (self.pf.line_of(start), self.pf.line_of(end_tok.start))
        return MethodDecl(
            name=name,
            param_types=tuple(pt for pt, _ in params),
            modifiers=self._modifier_set(pending),
            span=span,
            start=start,
            end=end_tok.start,
            is_ctor=(name == decl.name),
            has_body=has_body,
            body_open=body_open,
        )

    def _resync_member(self) -> None:
        depth = 0
        while self.peek() is not None:
            tok = self.advance()
            if tok.text in "({[":
                depth += 1
            elif tok.text in ")}]":
                depth -= 1
            elif tok.text == ";" and depth <= 0:
                return

    def _finish_method_header(self) -> Tuple[_Tok, bool, Optional[int]]:
        """Consume the throws/default tail; return (end token, has_body, body offset)."""
        saw_default = False
        while True:
            tok = self.peek()
            if tok is None:
                raise _ParseError("unterminated method header")
            if tok.text == "{":
                if saw_default:
                    self.skip_balanced("{", "}")  # annotation element array default
                    saw_default = False
                    continue
                open_tok = self.peek()
                close = self.skip_balanced("{", "}")
                return close, True, open_tok.start
            if tok.text == ";":
                return self.advance(), False, None
            if tok.text == "@":
                self.skip_annotation()
                continue
            if tok.is_word and tok.text == "default":
                saw_default = True
            self.advance()

    def _parse_param_list(self) -> List[Tuple[str, Optional[str]]]:
        """Cursor on '('. Returns [(type_name, param_name)] with generics erased."""
        toks: List[_Tok] = []
        depth = 0
        while True:
            tok = self.advance()
            if tok.text == "(":
                depth += 1
                if depth == 1:
                    continue
            elif tok.text == ")":
                depth -= 1
                if depth == 0:
                    break
            toks.append(tok)

        segments: List[List[_Tok]] = [[]]
        pdepth = gdepth = bdepth = adepth = 0
        for t in toks:
            c = t.text
            if c == "(":
                pdepth += 1
            elif c == ")":
                pdepth -= 1
            elif c == "<":
                gdepth += 1
            elif c == ">":
                gdepth = max(0, gdepth - 1)
            elif c == "[":
                bdepth += 1
            elif c == "]":
                bdepth -= 1
            elif c == "{":
                adepth += 1
            elif c == "}":
                adepth -= 1
            if c == "," and pdepth == gdepth == bdepth == adepth == 0:
                segments.append([])
            else:
                segments[-1].append(t)

        params: List[Tuple[str, Optional[str]]] = []
        for seg in segments:
            parsed = self._param_from_segment(seg)
            if parsed is not None:
                params.append(parsed)
        return params

    def _param_from_segment(self, seg: List[_Tok]) -> Optional[Tuple[str, Optional[str]]]:
        # drop annotations and 'final', erase generic argument lists
        flat: List[_Tok] = []
        gdepth = 0
        k = 0
        while k < len(seg):
            t = seg[k]
            if t.text == "<":
                gdepth += 1
                k += 1
                continue
            if t.text == ">":
                gdepth = max(0, gdepth - 1)
                k += 1
                continue
            if gdepth > 0:
                k += 1
                continue
            if t.text == "@":
                k += 1
                if k < len(seg) and seg[k].is_word:
                    k += 1
                    while k + 1 < len(seg) and seg[k].text == "." and seg[k + 1].is_word:
                        k += 2
                if k < len(seg) and seg[k].text == "(":
                    pd = 0
                    while k < len(seg):
                        if seg[k].text == "(":
                            pd += 1
                        elif seg[k].text == ")":
                            pd -= 1
                            if pd == 0:
                                k += 1
                                break
                        k += 1
                continue
            if t.is_word and t.text == "final":
                k += 1
                continue
            flat.append(t)
            k += 1

        words = [idx for idx, t in enumerate(flat) if t.is_word]
        if not words:
            return None
        name_idx = words[-1]
        name: Optional[str] = flat[name_idx].text
        base_parts: List[str] = []
        for t in flat[:name_idx]:
            if t.is_word or t.text == ".":
                base_parts.append(t.text)
        base = "".join(base_parts).strip(".")
        if not base:
            base, name = flat[name_idx].text, None  # unnamed (e.g. receiver-less decl)
        brackets = sum(1 for t in flat if t.text == "[")
        ellipsis = self._has_ellipsis(flat)
        type_str = base + "[]" * brackets + ("..." if ellipsis else "")
        return type_str, name

    @staticmethod
    def _has_ellipsis(flat: List[_Tok]) -> bool:
        run = 0
        for t in flat:
            if t.text == ".":
                run += 1
                if run == 3:
                    return True
            else:
                run = 0
        return False


# ---------------------------------------------------------------------------
# public API


def parse_source(text: str, path: str = "<memory>") -> ParsedFile:
    """Parse Java source into a declaration tree; failures set .error."""
    masked, literals = mask_source(text)
    lines = text.split("\n")
    line_starts = [0]
    for ln in lines[:-1]:
        line_starts.append(line_starts[-1] + len(ln) + 1)
    parsed = ParsedFile(
        path=path,
        lines=lines,
        masked=masked,
        literal_offsets=literals,
        line_starts=line_starts,
    )
    parser = _Parser(parsed)
    try:
        parsed.types = parser.parse_unit()
    except (_ParseError, RecursionError) as exc:
        parsed.types = []
        parsed.error = str(exc) or exc.__class__.__name__
    return parsed


def extract_modules(snapshot: FileSnapshot) -> List[ModuleDef]:
    """One ModuleDef per type declaration and per method/constructor declaration.

    Unparseable files are skipped with a warning and contribute no modules.
    """
    text = "\n".join(snapshot.lines)
    parsed = parse_source(text, snapshot.path)
    if parsed.error:
        log.warning("%s@%s: skipped, parse failed: %s", snapshot.path, snapshot.commit[:10], parsed.error)
        return []
    defs: List[ModuleDef] = []
    seen: Dict[ModuleId, bool] = {}

    def segment(span: Tuple[int, int]) -> Tuple[str, ...]:
        return tuple(parsed.lines[span[0] - 1:span[1]])

    for t in parsed.all_types():
        cid = ModuleId("class", snapshot.path, t.qualified)
        if cid not in seen:
            seen[cid] = True
            defs.append(ModuleDef(cid, t.span, segment(t.span)))
        else:
            log.warning("%s: duplicate type %s; keeping first", snapshot.path, t.qualified)
        for m in t.methods:
            mid = ModuleId("method", snapshot.path, t.qualified, m.name, m.param_types)
            if mid in seen:
                log.warning("%s: duplicate method %s; keeping first", snapshot.path, mid)
                continue
            seen[mid] = True
            defs.append(ModuleDef(mid, m.span, segment(m.span)))
    return defs
