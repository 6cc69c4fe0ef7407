def fmt(name, n):
    return f'{name!r}: {n:>10.2f}' + 'done'
