"""Exception types raised across the package."""


class CatnetError(Exception):
    """Base class for all package errors."""


class ParseError(CatnetError):
    """A KDD-format line could not be parsed."""

    def __init__(self, message, line_no=None, field_index=None):
        where = []
        if line_no is not None:
            where.append(f"line {line_no}")
        if field_index is not None:
            where.append(f"field {field_index}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.line_no = line_no
        self.field_index = field_index


class FieldCountError(ParseError):
    pass


class FieldTypeError(ParseError, TypeError):
    """Non-numeric text in a continuous field."""


class UnknownLabelError(CatnetError, KeyError):
    def __init__(self, label):
        super().__init__(label)
        self.label = label

    def __str__(self):
        return f"unknown attack label {self.label!r}; register it with CategoryMap.extend()"


class InsufficientRecordsError(CatnetError):
    def __init__(self, category, requested, available):
        super().__init__(
            f"category {category} has {available} records, {requested} requested"
        )
        self.category = category
        self.requested = requested
        self.available = available


class SchemaMismatchError(CatnetError):
    pass


class InvalidSpecError(CatnetError, ValueError):
    pass


class SingleClassError(CatnetError):
    pass


class ModelFormatError(CatnetError):
    pass


class LengthMismatchError(CatnetError, ValueError):
    pass


class EmptyError(CatnetError, ValueError):
    pass


class UndefinedRate(CatnetError, ArithmeticError):
    """A rate whose denominator is zero; rendered as a dash, never as 0."""


class NoQualifiedClassifierError(CatnetError):
    def __init__(self, category, policy):
        bounds = f"aa_min={policy.aa_min:g}"
        if policy.tt_budget_s is not None:
            bounds += f", tt_budget_s={policy.tt_budget_s:g}"
        super().__init__(f"no classifier qualifies for {category} under {bounds}")
        self.category = category
        self.policy = policy
