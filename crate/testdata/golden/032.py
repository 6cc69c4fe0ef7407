def front(items):
    return items[0]
