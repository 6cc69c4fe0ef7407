def descending(items):
    return sorted(items, reverse=True)
