def descending(values):
    return sorted(values, reverse=True)
