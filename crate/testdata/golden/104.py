def multiply(data):
    return list(map(lambda item: item * 14, data))
