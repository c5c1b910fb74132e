"""Warning message handlers"""


import logging
from abc import ABC


class ErrorMessageHandler(ABC):
    "Shows each distinct warning only once per kind"

    def __init__(self) -> None:
        self.error_messages: dict[str, set[str]] = {}

    def _is_new(self, kind: str, key: str) -> bool:
        "Returns True if `key` has not been seen before for `kind` and remembers it"
        seen = self.error_messages.setdefault(kind, set())
        if key in seen:
            return False
        seen.add(key)
        return True

    def count(self, kind: str) -> int:
        "Returns number of distinct warnings of a given kind"
        return len(self.error_messages.get(kind, ()))

    def show(self, kind: str, key: str, log_message: str, *log_args: object) -> None:
        """
        Shows warning via 'self._show()' only once

        ARGS:
            kind        : str - kind of warning, e.g. "unknown_pragma"
            key         : str - distinguishes messages of one kind, e.g. "file.c:12"
            log_message : str - lazy-formatted message
            log_args    ...   - arguments of the message
        """
        if self._is_new(kind, key):
            self._show(log_message, *log_args)

    def _show(self, *args):
        "Actually shows message"
        raise NotImplementedError


class ErrorMessageConsoleHandler(ErrorMessageHandler):
    "Shows messages via logging module"

    def __init__(self) -> None:
        super().__init__()
        self._show = logging.warning


class ErrorMessageCollector(ErrorMessageHandler):
    "Keeps formatted messages in memory, used where warnings are returned to a caller"

    def __init__(self) -> None:
        super().__init__()
        self.messages: list[str] = []

    def _show(self, *args):
        self.messages.append(args[0] % args[1:] if len(args) > 1 else args[0])
