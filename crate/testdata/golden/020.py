def front(xs):
    for item in xs:
        return item
    return None
