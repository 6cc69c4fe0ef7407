def docstring(x):
    """Return x unchanged.

    Multi-line docstring with 'quotes' inside.
    """
    return x
