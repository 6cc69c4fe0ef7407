def loops(xs):
    while xs:
        x = xs.pop()
        if x in (1, 2):
            continue
        elif x == 3:
            break
    else:
        return True
    return False
