def absolute(values):
    return list(map(abs, values))
