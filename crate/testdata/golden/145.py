def trailing(values):
    return values[len(values) - 1]
