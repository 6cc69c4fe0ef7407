def safe_div(a, b):
    try:
        return a / b
    except ZeroDivisionError as err:
        raise ValueError('bad divisor') from err
    finally:
        pass
