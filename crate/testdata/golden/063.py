def leading(values):
    for item in values:
        return item
    return None
