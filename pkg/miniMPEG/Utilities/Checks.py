from typing import Iterable, Any
from miniMPEG.Utilities.UtilityExceptions import KeywordNotAllowed, ValueOutOfRange


def type_check(parameters: list, types: list, strict_order: bool = False, raise_exception: bool = False) -> bool:
    """
    To be used in any case when the types cannot be trusted, for example values read from a YAML file.

    :param parameters: list of values to check.
    :param types: list of types that each parameter can be.
    :param strict_order: if True, then each parameter in "parameters" is matched to a type in "types" according to their
    position in a list (i.e. type_check([a, b], [str, int], strict_order=True) means that we check for type(a) == str and
    type(b) == int. If strict_order=False, we check for isinstance(a, (str, int)), same for all other parameters.
    :param raise_exception: True if exception is to be raised if the test failed.
    :return: Boolean or exception indicating if the type check is passed.
    """

    pairs = zip(parameters, types) if strict_order else ((p, tuple(types)) for p in parameters)

    for p, t in pairs:
        # bool is an int subclass; a YAML "true" must not pass as a number
        if isinstance(p, bool) and bool not in (t if isinstance(t, tuple) else (t,)):
            ok = False
        else:
            ok = isinstance(p, t)

        if not ok:
            if raise_exception:
                raise TypeError(f'Parameter with value "{p}" has wrong type. Expected one of the '
                                f'{types}, got {type(p)}.')
            return False
    return True


def keywords_check(keywords: Iterable[str], allowed_keywords: Iterable[str], function_name: str, variables: dict,
                   raise_exception: bool = True) -> bool:
    """
    Checks if the keywords passed to a function (or found in a config section) are within the allowed keywords.

    :param keywords: keywords to check. Usually **kwargs or the keys of a YAML mapping.
    :param allowed_keywords: A list or tuple of allowed keywords.
    :param function_name: Name of a function or config section that called the keywords_check().
    :param variables: values that help to understand the failure.
    :param raise_exception: True if exception is to be raised if the test failed.
    """

    keyword_difference = set(keywords).difference(set(allowed_keywords))

    if keyword_difference:
        if raise_exception:
            raise KeywordNotAllowed(*keyword_difference, variables=variables, func_name=function_name)
        return False
    return True


def range_check(name: str, value: Any, minimum: float | None = None, maximum: float | None = None,
                strict_minimum: bool = False, raise_exception: bool = True) -> bool:
    """
    Checks that minimum <= value <= maximum (or minimum < value when strict_minimum is set). None disables a bound.
    """

    low_ok = minimum is None or (value > minimum if strict_minimum else value >= minimum)
    high_ok = maximum is None or value <= maximum

    if low_ok and high_ok:
        return True
    if not raise_exception:
        return False

    low = '' if minimum is None else (f'> {minimum}' if strict_minimum else f'>= {minimum}')
    high = '' if maximum is None else f'<= {maximum}'
    expected = ' and '.join([b for b in (low, high) if b])
    raise ValueOutOfRange(name=name, value=value, expected=expected, variables={name: value})


def positive_check(name: str, value: Any, raise_exception: bool = True) -> bool:
    return range_check(name, value, minimum=0, strict_minimum=True, raise_exception=raise_exception)

