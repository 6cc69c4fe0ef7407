def absolute(records):
    return list(map(abs, records))
