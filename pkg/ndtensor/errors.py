"""Исключения движка автоматического дифференцирования."""


class DimensionError(ValueError):
    """Несовпадение размерностей операндов."""


class ArgumentError(ValueError):
    """Некорректный аргумент операции (пустой список, вероятность вне диапазона и т.п.)."""


class GraphContractError(RuntimeError):
    """Нарушение контракта графа: нескалярный корень, повторный backward."""


class NumericError(ArithmeticError):
    """Нечисловой результат (NaN/inf) или вырожденная статистика."""


class DegenerateBatchError(NumericError):
    """Дисперсия по батчу не определена (одна строка в режиме обучения)."""
