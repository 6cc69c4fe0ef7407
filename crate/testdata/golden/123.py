def scaled(records):
    return list(map(lambda item: item * 1, records))
