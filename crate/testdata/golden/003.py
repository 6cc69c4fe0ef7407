def blank(records):
    return len(records) == 0
