"""Lexer: UTF-8 text to tokens with byte offsets.

Keywords are case-insensitive; identifiers keep their case. Query text is
capped at 64 KiB to keep the services desk-safe.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..errors import LexError, QueryTooLarge

MAX_QUERY_BYTES = 64 * 1024


class TokenType(enum.Enum):
    SELECT = "SELECT"
    AS = "AS"
    FROM = "FROM"
    WHERE = "WHERE"
    GROUP = "GROUP"
    BY = "BY"
    ORDER = "ORDER"
    ASC = "ASC"
    DESC = "DESC"
    LIMIT = "LIMIT"
    AND = "AND"
    OR = "OR"
    NOT = "NOT"
    XMATCH = "XMATCH"
    WITH = "WITH"
    IDENT = "identifier"
    INT = "integer"
    FLOAT = "float"
    STRING = "string"
    STAR = "*"
    PLUS = "+"
    MINUS = "-"
    SLASH = "/"
    LPAREN = "("
    RPAREN = ")"
    COMMA = ","
    DOT = "."
    LT = "<"
    LE = "<="
    EQ = "="
    NE = "!="
    GE = ">="
    GT = ">"
    EOF = "end of query"


KEYWORDS = {
    t.value: t
    for t in (
        TokenType.SELECT,
        TokenType.AS,
        TokenType.FROM,
        TokenType.WHERE,
        TokenType.GROUP,
        TokenType.BY,
        TokenType.ORDER,
        TokenType.ASC,
        TokenType.DESC,
        TokenType.LIMIT,
        TokenType.AND,
        TokenType.OR,
        TokenType.NOT,
        TokenType.XMATCH,
        TokenType.WITH,
    )
}


@dataclass(frozen=True)
class Token:
    type: TokenType
    text: str
    offset: int  # byte offset into the UTF-8 encoding of the query
    value: object = None  # parsed value for INT/FLOAT/STRING


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(text: str) -> list[Token]:
    """Scan query text into a token list ending with an EOF token."""
    if len(text.encode("utf-8")) > MAX_QUERY_BYTES:
        raise QueryTooLarge(f"query exceeds {MAX_QUERY_BYTES} bytes", 0)
    out: list[Token] = []
    i = 0
    boff = 0  # running byte offset, tracked alongside the char index
    n = len(text)

    def advance(k_chars: int):
        nonlocal i, boff
        boff += len(text[i : i + k_chars].encode("utf-8"))
        i += k_chars

    while i < n:
        c = text[i]
        if c.isspace():
            advance(1)
            continue
        start = boff
        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            word = text[i:j]
            ttype = KEYWORDS.get(word.upper(), TokenType.IDENT)
            out.append(Token(ttype, word, start))
            advance(j - i)
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_float = False
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            word = text[i:j]
            if is_float:
                out.append(Token(TokenType.FLOAT, word, start, float(word)))
            else:
                out.append(Token(TokenType.INT, word, start, int(word)))
            advance(j - i)
            continue
        if c == "'":
            j = i + 1
            parts: list[str] = []
            closed = False
            while j < n:
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":  # '' escapes a quote
                        parts.append("'")
                        j += 2
                        continue
                    closed = True
                    j += 1
                    break
                parts.append(text[j])
                j += 1
            if not closed:
                raise LexError("unterminated string literal", start)
            out.append(Token(TokenType.STRING, text[i:j], start, "".join(parts)))
            advance(j - i)
            continue
        two = text[i : i + 2]
        if two in ("<=", ">=", "!=", "<>"):
            tt = {"<=": TokenType.LE, ">=": TokenType.GE}.get(two, TokenType.NE)
            out.append(Token(tt, two, start))
            advance(2)
            continue
        singles = {
            "*": TokenType.STAR,
            "+": TokenType.PLUS,
            "-": TokenType.MINUS,
            "/": TokenType.SLASH,
            "(": TokenType.LPAREN,
            ")": TokenType.RPAREN,
            ",": TokenType.COMMA,
            ".": TokenType.DOT,
            "<": TokenType.LT,
            "=": TokenType.EQ,
            ">": TokenType.GT,
        }
        if c in singles:
            out.append(Token(singles[c], c, start))
            advance(1)
            continue
        raise LexError(f"illegal character {c!r}", start)
    out.append(Token(TokenType.EOF, "", boff))
    return out
