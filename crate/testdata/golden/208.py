def chained(s):
    return s.strip().lower().replace('a', 'b').split(',')
