def unique(records):
    seen = []
    for item in records:
        if item not in seen:
            seen.append(item)
    return seen
