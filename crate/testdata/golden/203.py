def tabs(x):
	if x:
		return x
	return None
