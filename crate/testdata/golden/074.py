def has_nothing(items):
    return not items
