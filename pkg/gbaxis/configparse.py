from typing import Dict
from parsimonious.grammar import Grammar
from parsimonious.exceptions import ParseError
from gbaxis.model import GbaError


CONFIG_GRAMMAR = Grammar(
    r"""
    config   = line*
    line     = hspace content? hspace comment? newline
    content  = section / entry
    section  = "[" hspace name hspace "]"
    entry    = key hspace "=" hspace value
    key      = ~"[A-Za-z_][A-Za-z0-9_]*"
    name     = ~"[A-Za-z_][A-Za-z0-9_]*"
    value    = ~"[^#;\n]*"
    comment  = ~"[#;][^\n]*"
    hspace   = ~"[ \t]*"
    newline  = ~"\r?\n"
    """)


class ConfigError(GbaError):
    def __init__(self, message, line: int = 0):
        if line:
            message = "line " + str(line) + ": " + message
        GbaError.__init__(self, message)
        self.line = line


class ConfigVisitor:
    """Collects `{section: {key: raw value}}` from a parse tree."""

    def __init__(self, text: str):
        self._text = text
        self._section = None
        self._key = None
        self.sections: Dict[str, Dict[str, str]] = {}

    def _line_of(self, node) -> int:
        return self._text.count("\n", 0, node.start) + 1

    def visit(self, node):
        enter_visitor = getattr(self, "enter_" + node.expr_name, None)
        if enter_visitor:
            enter_visitor(node)

        for n in node.children:
            self.visit(n)

        visitor = getattr(self, "visit_" + node.expr_name, None)
        if visitor:
            visitor(node)

    def enter_section(self, node):
        name = node.children[2].text
        if name in self.sections:
            raise ConfigError("duplicate section [" + name + "]", self._line_of(node))
        self._section = name
        self.sections[name] = {}

    def visit_key(self, node):
        if self._section is None:
            raise ConfigError("entry " + repr(node.text) + " outside of any [section]", self._line_of(node))
        if node.text in self.sections[self._section]:
            raise ConfigError("duplicate key " + repr(node.text) + " in [" + self._section + "]",
                              self._line_of(node))
        self._key = node.text

    def visit_value(self, node):
        self.sections[self._section][self._key] = node.text.strip()


def parse_config_text(text: str) -> Dict[str, Dict[str, str]]:
    """Parse `[section]` / `key = value` text into raw string values."""
    if not text.endswith("\n"):
        text += "\n"
    try:
        tree = CONFIG_GRAMMAR.parse(text)
    except ParseError as exc:
        raise ConfigError("syntax error at column " + str(exc.column()) + ": "
                          + repr(text.splitlines()[exc.line() - 1] if text.splitlines() else ""), exc.line())
    visitor = ConfigVisitor(text)
    visitor.visit(tree)
    return visitor.sections
