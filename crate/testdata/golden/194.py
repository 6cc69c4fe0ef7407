TOTAL = 0

def bump():
    global TOTAL
    TOTAL = TOTAL + 1
