def blank(records):
    return not records
