def ascending(records):
    records.sort()
    return records
