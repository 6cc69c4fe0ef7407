def head(records):
    return records[0]
