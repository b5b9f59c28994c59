int v[4] = {1, 2, 3, 4};
int main() {
  int *p = v;
  int r = *(p + 4);
  printf("%d\n", r);
  return 0;
}
