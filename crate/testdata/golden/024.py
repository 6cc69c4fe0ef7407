def add_to_all(items):
    return list(map(lambda item: item + 14, items))
